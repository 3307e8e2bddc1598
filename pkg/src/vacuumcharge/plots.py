"""Optional PNG renderings of the tables the CLI writes.

Only imported when ``--figures`` is given, so matplotlib is never needed
for plain runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def levels_figure(path: Path, free, perturbed, title: str = "levels") -> Path:
    fig, ax = plt.subplots(figsize=(4, 5))
    ax.hlines(free, 0.0, 0.8, color="0.5", lw=1, label="free")
    ax.hlines(perturbed, 1.2, 2.0, color="C0", lw=1, label="perturbed")
    ax.axhline(0.0, color="k", lw=0.5, ls=":")
    ax.set_xticks([0.4, 1.6], ["free", "perturbed"])
    ax.set_ylabel("E")
    ax.set_title(title)
    return _save(fig, path)


def staircase_figure(path: Path, x, integer, smooth, xlabel: str, ylabel: str = "Q_c") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.step(x, integer, where="mid", label="integer count")
    ax.plot(x, smooth, label="continuum", ls="--")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)


def profile_figure(path: Path, x, y, xlabel: str, ylabel: str, level: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(x, y)
    if level is not None:
        ax.axhline(level, color="k", lw=0.8, ls=":")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return _save(fig, path)
