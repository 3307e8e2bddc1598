import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vacuumcharge.rootfind import CoarseGridWarning, bisect_all, bracket_sign_changes, scan_roots


def test_brackets_of_sine():
    grid = np.linspace(0.5, 10, 200)
    lo, hi = bracket_sign_changes(np.sin, grid)
    assert len(lo) == 3
    roots = bisect_all(np.sin, lo, hi, rtol=1e-14)
    assert np.allclose(roots, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)


@given(st.lists(st.floats(-9, 9), min_size=1, max_size=6, unique=True))
def test_scan_finds_separated_simple_roots(rs):
    rs = sorted(rs)
    if len(rs) > 1 and min(np.diff(rs)) < 0.05:
        return
    f = lambda x: np.prod([np.asarray(x) - r for r in rs], axis=0)
    found = scan_roots(f, (-10.0, 10.0), 0.01, rtol=1e-13)
    assert np.allclose(found, rs, atol=1e-9)


def test_crowded_cell_refined_with_count():
    # two roots inside one coarse cell; the counting function exposes them
    f = lambda x: (np.asarray(x) - 1.0) * (np.asarray(x) - 1.01)
    count = lambda x: (np.asarray(x) > 1.0).astype(float) + (np.asarray(x) > 1.01)
    with pytest.warns(CoarseGridWarning):
        found = scan_roots(f, (0.0, 2.0), 0.5, rtol=1e-13, count=count)
    assert np.allclose(found, [1.0, 1.01], atol=1e-10)


def test_no_roots():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert len(scan_roots(lambda x: np.ones_like(np.asarray(x, float)), (0, 1), 0.1)) == 0
