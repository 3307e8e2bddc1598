"""Deterministic CSV/JSON writers and the run manifest."""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = "1"


def _clean(obj):
    """Convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    body = {"schema_version": SCHEMA_VERSION, **_clean(payload)}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def tool_version() -> str:
    from . import __version__
    return __version__


def write_manifest(out_dir: Path, command: str, config: dict, units: str,
                   tolerances: dict, outputs: Sequence[str]) -> Path:
    """Written before any result file; ``finish_manifest`` adds timing."""
    payload = {
        "command": command,
        "config": config,
        "units": units,
        "tool_version": tool_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "tolerances": tolerances,
        "outputs": list(outputs),
        "status": "running",
        "started_unix": time.time(),
    }
    return write_json(out_dir / "manifest.json", payload)


def finish_manifest(out_dir: Path, status: str, outputs: Sequence[str], started: float) -> None:
    path = out_dir / "manifest.json"
    data = json.loads(path.read_text())
    data["status"] = status
    data["outputs"] = list(outputs)
    data["wall_clock_s"] = time.perf_counter() - started
    data.pop("schema_version", None)
    write_json(path, data)


def load_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
