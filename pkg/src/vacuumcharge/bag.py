"""Massless MIT bag analytics, regularized spectral sums and the chiral bag.

For m = 0 every level of the bag moves by the same amount
``dE = (1/2R) int V`` (a rotation of the spinor removes V entirely), so the
perturbed spectrum is ``(2n - 1) a + dE`` with ``a = pi / 4R`` and n running
over all integers.  Levels with n >= 1 form the positive branch and the
others the negative branch; with a large shift some of them sit on the
other side of zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import exp1

from .dirac import ZERO_MODE_TOL, solve_spectrum, solve_with_walls
from .errors import ExtrapolationError, SpecError, WindowError, ZeroModeError
from .model import BoxGeometry, Level, PotentialSpec, Segment, Spectrum, validate_potential

KINDS = ("split-point-perturbed", "banerjee-unperturbed", "fermi-tracking")


@dataclass(frozen=True)
class RegularizationMethod:
    kind: str = "split-point-perturbed"
    s_sequence: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05, 0.025)
    numeric: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularization {self.kind!r}; choose from {KINDS}")
        s = self.s_sequence
        if len(s) < 3:
            raise ValueError("need at least three s values")
        if any(v <= 0 for v in s):
            raise ValueError("s values must be positive")
        if any(b >= a for a, b in zip(s[:-1], s[1:])):
            raise ValueError("s values must be strictly decreasing")


def _require_massless(spec: PotentialSpec):
    if spec.mass != 0.0:
        raise SpecError("the closed-form bag results need m = 0; use solve_spectrum")


def uniform_shift(spec: PotentialSpec, box: BoxGeometry) -> float:
    """Exact common level shift (1/2R) int V of the massless bag."""
    _require_massless(spec)
    return spec.integral_V() / (2.0 * box.R)


def free_bag_level(n, box: BoxGeometry):
    """(2n - 1) pi / 4R."""
    return (2 * np.asarray(n) - 1) * math.pi / (4 * box.R)


def perturbed_bag_spectrum(spec: PotentialSpec, box: BoxGeometry,
                           n_range: Sequence[int]) -> Spectrum:
    """Closed-form massless spectrum E'_n = (2n - 1) pi/4R + dE for n in ``n_range``.

    Levels carry their node label n.
    """
    dE = uniform_shift(spec, box)
    ns = sorted(set(int(n) for n in n_range))
    levels = tuple(Level(float(free_bag_level(n, box) + dE), "none", 0.0, n) for n in ns)
    lo = levels[0].E if levels else 0.0
    hi = levels[-1].E if levels else 0.0
    return Spectrum(levels, (lo, hi))


@dataclass(frozen=True)
class CrossingEstimate:
    estimate: float   # -(1/pi) int V, the smooth count
    dives: int        # positive free levels that end below zero
    rises: int        # negative free levels that end above zero

    @property
    def signed_count(self) -> int:
        return self.dives - self.rises


def _flip_counts(dE: float, box: BoxGeometry) -> tuple[int, int]:
    a = math.pi / (4 * box.R)
    r = dE / a
    # a level lands on zero when -dE/a is an odd integer
    if abs((r + 1) / 2 - round((r + 1) / 2)) * 2 * a < ZERO_MODE_TOL:
        raise ZeroModeError(f"shift {dE} puts a bag level at E = 0")
    # (2n - 1) a + dE < 0 with n >= 1, and > 0 with n <= 0
    dives = max(0, math.ceil((1 - r) / 2) - 1)
    rises = max(0, math.ceil((r - 1) / 2))
    return dives, rises


def crossing_estimate(spec: PotentialSpec, box: BoxGeometry) -> CrossingEstimate:
    """Smooth estimate -dE/(pi/2R) against the exact number of sign flips."""
    dE = uniform_shift(spec, box)
    dives, rises = _flip_counts(dE, box)
    return CrossingEstimate(-dE / (math.pi / (2 * box.R)), dives, rises)


# -- split-point sums ----------------------------------------------------------

def split_point_analytic(dE: float, box: BoxGeometry) -> float:
    """Limit s -> 0 of the geometric-series closed form: -2R dE / pi."""
    return -2.0 * box.R * dE / math.pi


def split_point_closed(s: float, dE: float, box: BoxGeometry) -> float:
    """Closed form of the regularized half-difference at finite s."""
    a = math.pi / (4 * box.R)
    return -math.sinh(s * dE) / (2.0 * math.sinh(s * a))


def split_point_sum(positive_branch: np.ndarray, negative_branch: np.ndarray, s: float,
                    tail: Callable[[float], float] | None = None) -> float:
    """(1/2)[sum_+ exp(-s E) - sum_- exp(s E)] over explicit branch levels."""
    if s <= 0:
        raise ValueError("s must be positive")
    pos = np.sort(np.asarray(positive_branch, dtype=float))
    neg = np.sort(np.asarray(negative_branch, dtype=float))[::-1]
    val = 0.5 * (math.fsum(np.exp(-s * pos)) - math.fsum(np.exp(s * neg)))
    if tail is not None:
        val += tail(s)
    return val


def _truncated_branches(dE: float, box: BoxGeometry, s: float, cut: float = 50.0):
    a = math.pi / (4 * box.R)
    n_max = int(math.ceil((cut / s + abs(dE)) / (2 * a))) + 2
    n = np.arange(1, n_max + 1)
    pos = (2 * n - 1) * a + dE
    neg = -(2 * n - 1) * a + dE
    return pos, neg


@dataclass(frozen=True)
class Extrapolation:
    value: float
    s_values: tuple[float, ...]
    samples: tuple[float, ...]
    successive: tuple[float, ...]

    @property
    def spread(self) -> float:
        return abs(self.successive[-1] - self.successive[-2]) if len(self.successive) > 1 else 0.0


def extrapolate_to_zero(s_values: Sequence[float], samples: Sequence[float],
                        tol: float = 1e-4, log_term: bool = False) -> Extrapolation:
    """Fit a + b s + c s^2 to consecutive triples; the last fit is the limit.

    With ``log_term`` an extra ``s log s`` column is fitted on windows of
    four points; it appears when level shifts fall off like 1/E.
    Successive estimates differing by more than ``tol`` raise
    :class:`ExtrapolationError`.
    """
    s = np.asarray(s_values, dtype=float)
    y = np.asarray(samples, dtype=float)
    width = 4 if log_term else 3
    if s.size < width:
        raise ValueError(f"need at least {width} samples")
    ests = []
    for i in range(s.size - width + 1):
        ss = s[i:i + width]
        cols = [np.ones_like(ss), ss, ss * ss]
        if log_term:
            cols.insert(2, ss * np.log(ss))
        coef = np.linalg.solve(np.stack(cols, axis=1), y[i:i + width])
        ests.append(float(coef[0]))
    if len(ests) > 1 and abs(ests[-1] - ests[-2]) > tol:
        raise ExtrapolationError(
            f"s -> 0 extrapolation not converged: {ests[-2]:.8g} vs {ests[-1]:.8g}")
    return Extrapolation(ests[-1], tuple(map(float, s)), tuple(map(float, y)), tuple(ests))


def split_point_numeric(dE: float, box: BoxGeometry, s_sequence: Sequence[float]) -> Extrapolation:
    """Explicit truncated level sums at each s, extrapolated to s = 0."""
    samples = []
    for s in s_sequence:
        pos, neg = _truncated_branches(dE, box, s)
        samples.append(split_point_sum(pos, neg, s))
    return extrapolate_to_zero(s_sequence, samples)


def split_point_integral(dE: float, box: BoxGeometry,
                         s_sequence: Sequence[float] = (0.04, 0.02, 0.01, 0.005, 0.0025),
                         n_lower: float = 1.0) -> Extrapolation:
    """The level sums replaced by integrals over n from ``n_lower`` to infinity.

    The integrands carry odd powers of s that the level sums lack, so the
    default s values are smaller than for the sums.
    """
    a = math.pi / (4 * box.R)
    samples = []
    for s in s_sequence:
        up, _ = quad(lambda n: math.exp(-s * ((2 * n - 1) * a + dE)), n_lower, math.inf,
                     epsabs=1e-14, epsrel=1e-13)
        dn, _ = quad(lambda n: math.exp(s * (-(2 * n - 1) * a + dE)), n_lower, math.inf,
                     epsabs=1e-14, epsrel=1e-13)
        samples.append(0.5 * (up - dn))
    return extrapolate_to_zero(s_sequence, samples)


def regularized_charge(spectrum_shift: float, box: BoxGeometry,
                       method: RegularizationMethod | None = None) -> float:
    """Vacuum charge of the uniformly shifted massless bag under ``method``.

    split-point-perturbed: -2R dE / pi (numeric extrapolation when
    ``method.numeric``); banerjee-unperturbed: weights taken from the free
    levels, so the two sums cancel; fermi-tracking: the signed number of
    levels that crossed zero (dives minus rises).
    """
    method = method or RegularizationMethod()
    dE = float(spectrum_shift)
    if method.kind == "split-point-perturbed":
        if method.numeric:
            return split_point_numeric(dE, box, method.s_sequence).value
        return split_point_analytic(dE, box)
    if method.kind == "banerjee-unperturbed":
        if method.numeric:
            samples = []
            for s in method.s_sequence:
                pos, neg = _truncated_branches(0.0, box, s)
                samples.append(split_point_sum(pos, neg, s))
            return extrapolate_to_zero(method.s_sequence, samples).value
        return 0.0
    dives, rises = _flip_counts(dE, box)
    return float(dives - rises)


@dataclass(frozen=True)
class RegularizationReport:
    method: str
    s_sequence: tuple[float, ...]
    truncation: float
    extrapolated: float
    analytic: float

    @property
    def discrepancy(self) -> float:
        return self.extrapolated - self.analytic

    def to_dict(self) -> dict:
        return {"method": self.method, "s_sequence": list(self.s_sequence),
                "truncation": self.truncation, "extrapolated_Q": self.extrapolated,
                "analytic_Q": self.analytic, "discrepancy": self.discrepancy}


def regularization_report(spec: PotentialSpec, box: BoxGeometry,
                          method: RegularizationMethod) -> RegularizationReport:
    """Numeric and closed-form values of one scheme side by side."""
    dE = uniform_shift(spec, box)
    analytic = regularized_charge(dE, box, RegularizationMethod(method.kind, method.s_sequence))
    numeric = regularized_charge(dE, box, RegularizationMethod(method.kind, method.s_sequence,
                                                               numeric=True))
    return RegularizationReport(method.kind, tuple(method.s_sequence), 50.0, numeric, analytic)


# -- mass independence -----------------------------------------------------------

@dataclass(frozen=True)
class MassIndependence:
    difference: float
    tail_correction: float
    window: tuple[float, float]
    extrapolation: Extrapolation


def mass_independence_check(spec: PotentialSpec, box: BoxGeometry, m: float,
                            s_sequence: Sequence[float] = (0.2, 0.1, 0.05, 0.025, 0.0125,
                                                           0.00625),
                            e_window: float | None = None,
                            tail_tol: float = 1e-3) -> MassIndependence:
    """Split-point charge with mass ``m`` minus the massless closed form.

    Levels with |E| below ``e_window`` are solved numerically with the mass
    switched on and assigned to a branch by their node label; beyond the
    window both spectra are continued as (2n - 1) pi/4R + dE, so the tails
    cancel.  The size of the neglected O(m^2/E) tail shifts is estimated
    and must stay below ``tail_tol``.
    """
    if m < 0:
        raise ValueError("mass must be non-negative")
    massless = PotentialSpec(spec.segments, spec.point_terms, 0.0)
    dE = uniform_shift(massless, box)
    if m == 0:
        ext = extrapolate_to_zero(s_sequence, [0.0] * len(s_sequence), log_term=True)
        return MassIndependence(0.0, 0.0, (0.0, 0.0), ext)
    a = math.pi / (4 * box.R)
    s_min = min(s_sequence)

    def tail_estimate(edge):
        # sum beyond the window of s m^2/(2E) exp(-s E), both branches
        return 2 * s_min * m * m / (2 * 2 * a) * float(exp1(s_min * edge))

    if e_window is None:
        e_window = max(60.0, 40.0 * m)
        while tail_estimate(e_window) > 0.5 * tail_tol and e_window < 1e4:
            e_window *= 1.5
    # window edges halfway between massless levels
    n_top = int(math.floor((e_window - dE) / (2 * a) + 0.5))
    n_bot = int(math.ceil((-e_window - dE) / (2 * a) + 0.5))
    hi = 2 * n_top * a + dE
    lo = 2 * (n_bot - 1) * a + dE
    massive = PotentialSpec(spec.segments, spec.point_terms, m)
    sp = solve_spectrum(massive, box, (lo, hi))
    labels = np.array([lv.label for lv in sp.levels])
    expected = np.arange(n_bot, n_top + 1)
    if labels.size != expected.size or np.any(np.sort(labels) != expected):
        raise WindowError("massive window does not hold the same labelled levels as the "
                          "massless one; widen e_window")
    Em = sp.energies
    n = labels
    E0 = (2 * n - 1) * a + dE
    plus = n >= 1
    tail = tail_estimate(min(abs(hi), abs(lo)))
    if tail > tail_tol:
        raise WindowError(f"tail correction {tail:.2e} exceeds {tail_tol:.0e}; widen e_window")
    samples = []
    for s in s_sequence:
        d = 0.5 * (math.fsum(np.exp(-s * Em[plus]) - np.exp(-s * E0[plus]))
                   - math.fsum(np.exp(s * Em[~plus]) - np.exp(s * E0[~plus])))
        samples.append(d)
    ext = extrapolate_to_zero(s_sequence, samples, tol=1e-3, log_term=True)
    return MassIndependence(ext.value, tail, (lo, hi), ext)


# -- chiral bag -------------------------------------------------------------------

@dataclass(frozen=True)
class ChiralProfile:
    """Piecewise-linear chiral angle through the nodes ``(x_i, theta_i)``."""

    x: tuple[float, ...]
    theta: tuple[float, ...]

    def __post_init__(self):
        if len(self.x) != len(self.theta) or len(self.x) < 2:
            raise ValueError("need at least two (x, theta) nodes")
        if any(b <= a for a, b in zip(self.x[:-1], self.x[1:])):
            raise ValueError("profile nodes must be strictly increasing")
        if not all(math.isfinite(t) for t in self.theta):
            raise ValueError("theta must be finite")

    def __call__(self, x):
        return np.interp(x, self.x, self.theta)

    @property
    def box(self) -> BoxGeometry:
        if abs(self.x[0] + self.x[-1]) > 1e-12 * max(1.0, abs(self.x[0])):
            raise ValueError("profile must span a symmetric interval [-R, R]")
        return BoxGeometry(self.x[-1])


def chiral_to_mit(profile: ChiralProfile) -> tuple[PotentialSpec, BoxGeometry]:
    """Equivalent massless MIT problem with V = theta'/2 on each linear piece."""
    box = profile.box
    segs = []
    for x0, x1, t0, t1 in zip(profile.x[:-1], profile.x[1:], profile.theta[:-1],
                              profile.theta[1:]):
        segs.append(Segment(x0, x1, 0.0, 0.5 * (t1 - t0) / (x1 - x0)))
    return validate_potential(PotentialSpec(tuple(segs), (), 0.0), box), box


def chiral_spectrum(profile: ChiralProfile, window: tuple[float, float]) -> np.ndarray:
    """Levels of the free massless quark with the chiral-angle wall condition.

    The wall condition ``[cos theta - i alpha sin theta + beta xhat] q = 0``
    selects q along angle -theta(-R)/2 at the left wall and along
    pi/2 - theta(R)/2 at the right wall.
    """
    box = profile.box
    free = PotentialSpec((Segment(-box.R, box.R),), (), 0.0)
    tL, tR = profile.theta[0], profile.theta[-1]
    return solve_with_walls(free, box, -0.5 * tL, 0.5 * math.pi - 0.5 * tR, window)


def chiral_rotation(theta: float) -> np.ndarray:
    """Matrix taking the MIT spinor psi to the chiral-bag spinor q at angle theta."""
    phi = -0.5 * theta - 0.25 * math.pi
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def chiral_wall_matrix(theta: float, xhat: float) -> np.ndarray:
    """``cos theta - i alpha sin theta + beta xhat`` for alpha = sigma_2 (real)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c + xhat, -s], [s, c - xhat]])
