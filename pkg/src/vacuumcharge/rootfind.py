"""Grid-scan bracketing and vectorized bisection."""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np


class CoarseGridWarning(UserWarning):
    """A scan cell held more than one root and had to be refined."""


def bracket_sign_changes(f: Callable[[np.ndarray], np.ndarray], grid: np.ndarray):
    """Return (lo, hi) arrays of adjacent grid points where ``f`` changes sign.

    Exact zeros on grid points are reported as degenerate brackets lo == hi.
    """
    vals = np.asarray(f(grid), dtype=float)
    s = np.sign(vals)
    zero = s == 0
    change = (s[:-1] * s[1:] < 0)
    lo = list(grid[:-1][change])
    hi = list(grid[1:][change])
    lo += list(grid[zero])
    hi += list(grid[zero])
    order = np.argsort(lo)
    return np.asarray(lo)[order], np.asarray(hi)[order]


def bisect_all(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray,
               rtol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Bisect every bracket at once until ``hi - lo <= rtol * max(1, |x|)``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    flo = np.asarray(f(lo), dtype=float)
    for _ in range(max_iter):
        width = hi - lo
        active = width > rtol * np.maximum(1.0, np.abs(lo))
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        # stop where the midpoint no longer separates the endpoints
        stuck = (mid <= lo) | (mid >= hi)
        active &= ~stuck
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        fm = np.asarray(f(mid[idx]), dtype=float)
        left = np.sign(fm) * np.sign(flo[idx]) <= 0
        hi[idx[left]] = mid[idx[left]]
        lo[idx[~left]] = mid[idx[~left]]
        flo[idx[~left]] = fm[~left]
    return 0.5 * (lo + hi)


def scan_roots(f: Callable[[np.ndarray], np.ndarray], window: tuple[float, float],
               step: float, rtol: float = 1e-12,
               count: Callable[[np.ndarray], np.ndarray] | None = None,
               max_refine: int = 12) -> np.ndarray:
    """All roots of ``f`` in ``window`` by grid scan plus bisection.

    ``count``, when given, is a monotone real function whose integer
    crossings mark the roots.  Cells it reports as holding two or more
    roots are subdivided (with a :class:`CoarseGridWarning`) until each
    holds at most one.
    """
    a, b = map(float, window)
    if not b > a:
        raise ValueError("empty window")
    n = max(2, int(np.ceil((b - a) / step)) + 1)
    grid = np.linspace(a, b, n)
    if count is not None:
        warned = False
        for _ in range(max_refine):
            c = np.floor(np.asarray(count(grid), dtype=float))
            per_cell = np.abs(np.diff(c))
            crowded = np.nonzero(per_cell >= 2)[0]
            if crowded.size == 0:
                break
            if not warned:
                warnings.warn(f"{crowded.size} scan cell(s) held several roots; refining",
                              CoarseGridWarning, stacklevel=3)
                warned = True
            extra = [np.linspace(grid[i], grid[i + 1], int(4 * per_cell[i]) + 2)[1:-1]
                     for i in crowded]
            grid = np.unique(np.concatenate([grid, *extra]))
    lo, hi = bracket_sign_changes(f, grid)
    return bisect_all(f, lo, hi, rtol=rtol)
