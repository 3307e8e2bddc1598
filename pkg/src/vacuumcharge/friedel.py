"""Nonrelativistic Fermi gas in a hard sphere with a central impurity.

Units: hbar = 1 and E = k^2 / (2 * mass).  The radial function u = r R(r)
obeys ``u'' = [l(l+1)/r^2 + 2 mass (V - E)] u``.  Inside the potential it
is integrated with fixed-step RK4; beyond the last potential edge it is
written exactly as ``F(kr) sin(theta_l(kr) + eta_l)`` where
``rj = F sin(theta_l)`` and ``ry = -F cos(theta_l)`` are the Riccati-Bessel
functions and theta_l is their continuous phase (0 at the origin, close to
``kr - l pi/2`` far out).

The branch of eta_l follows from node counting: with N zeros of u inside
the matching radius, ``theta_l(k r_m) + eta_l`` lies in [N pi, (N+1) pi).
This is the branch continuous in the coupling from eta = 0, which is also
the one with eta_l(E -> inf) = 0 and eta_l(0+) = (number of bound states) pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .errors import MatchingRegionError, SpecError, TruncationError


@dataclass(frozen=True)
class RadialPotential:
    """Piecewise-constant central potential with an optional hard core.

    ``values[i]`` holds on ``(edges[i-1], edges[i])`` with ``edges[-1]`` taken
    as ``hard_core`` (0 by default); V = 0 beyond ``edges[-1]``.
    """

    edges: tuple[float, ...]
    values: tuple[float, ...]
    hard_core: float = 0.0

    def __post_init__(self):
        if len(self.edges) != len(self.values):
            raise SpecError("edges and values must have the same length")
        prev = self.hard_core
        if prev < 0:
            raise SpecError("hard-core radius must be non-negative")
        for e in self.edges:
            if not e > prev:
                raise SpecError("edges must increase beyond the hard core")
            prev = e
        if not all(math.isfinite(v) for v in self.values):
            raise SpecError("potential values must be finite")

    @classmethod
    def free(cls) -> "RadialPotential":
        return cls((), ())

    @classmethod
    def square_well(cls, depth: float, radius: float) -> "RadialPotential":
        """V = -depth for r < radius (depth > 0 attracts)."""
        return cls((radius,), (-depth,))

    @classmethod
    def hard_sphere(cls, radius: float) -> "RadialPotential":
        return cls((), (), hard_core=radius)

    @classmethod
    def from_function(cls, f: Callable[[float], float], support: float,
                      pieces: int = 200) -> "RadialPotential":
        """Midpoint piecewise-constant approximation of ``f`` on (0, support)."""
        edges = np.linspace(0.0, support, pieces + 1)[1:]
        mids = edges - 0.5 * support / pieces
        return cls(tuple(edges), tuple(float(f(r)) for r in mids))

    def scaled(self, g: float) -> "RadialPotential":
        return RadialPotential(self.edges, tuple(g * v for v in self.values), self.hard_core)

    @property
    def support(self) -> float:
        r = self.hard_core
        for e, v in zip(self.edges, self.values):
            if v != 0.0:
                r = e
        return r

    @property
    def is_free(self) -> bool:
        return self.support == 0.0

    def pieces(self):
        lo = self.hard_core
        out = []
        for e, v in zip(self.edges, self.values):
            if e <= self.support:
                out.append((lo, e, v))
            lo = e
        return out


@dataclass(frozen=True)
class RadialChannel:
    l: int
    eta: float                       # eta_l at the Fermi energy
    E: float | None = None

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise ValueError("l must be a non-negative integer")

    @property
    def weight(self) -> int:
        return 2 * (2 * int(self.l) + 1)


# -- Riccati-Bessel phase ------------------------------------------------------

def _riccati(l: int, x):
    x = np.asarray(x, dtype=float)
    return x * spherical_jn(l, x), x * spherical_yn(l, x)


def _riccati_prime(l: int, x):
    x = np.asarray(x, dtype=float)
    j, y = spherical_jn(l, x), spherical_yn(l, x)
    jp, yp = spherical_jn(l, x, derivative=True), spherical_yn(l, x, derivative=True)
    return j + x * jp, y + x * yp


def riccati_phase(l: int, x) -> np.ndarray:
    """Continuous phase theta_l(x) with rj = F sin(theta), ry = -F cos(theta).

    theta_l increases with slope 1/F^2 <= 1, so unwrapping on a grid of
    unit spacing from the origin is safe.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size == 0:
        return x.copy()
    m = int(math.ceil(max(float(np.max(x)), 0.0))) + 2
    grid = np.maximum(x, 0.0)[:, None] * np.linspace(0.0, 1.0, m + 1)[None, 1:]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        rj, ry = _riccati(l, grid)
        ang = np.arctan2(rj, -ry)
    ang = np.where(np.isfinite(ang), ang, 0.0)
    out = np.unwrap(ang, axis=1)[:, -1]
    return np.where(x > 0, out, 0.0)


# -- interior integration ------------------------------------------------------

def _grid(pot: RadialPotential, l: int, k_scale: float, mass: float,
          steps_per_wavelength: int, r_end: float | None = None) -> np.ndarray:
    """Integration nodes from the start radius to ``r_end`` (default: support).

    Every potential edge is a node.  Steps stay below 1/steps_per_wavelength
    of the local wavelength; near the origin they also stay below a tenth of
    the centrifugal length r / sqrt(l(l+1)), which keeps RK4 stable.
    """
    r_end = pot.support if r_end is None else r_end
    pieces = pot.pieces()
    if r_end > pot.support:
        pieces = pieces + [(pot.support, r_end, 0.0)]
    pts = []
    for lo, hi, v in pieces:
        kloc = math.sqrt(k_scale ** 2 + 2.0 * mass * abs(v))
        h = min(2.0 * math.pi / max(kloc, 1e-8) / steps_per_wavelength, (hi - lo) / 4.0)
        if lo == 0.0:
            r = min(1e-3 * hi, 1e-2 * h)
            seg = [r]
            c = 0.1 / math.sqrt(l * (l + 1)) if l > 0 else math.inf
            while r < hi:
                r = min(r + min(h, c * r), hi)
                seg.append(r)
            seg = np.array(seg)
        else:
            seg = np.linspace(lo, hi, max(1, int(math.ceil((hi - lo) / h))) + 1)
        pts.append(seg if not pts else seg[1:])
    if not pts:
        return np.array([pot.hard_core]) if pot.hard_core > 0 else np.array([])
    return np.concatenate(pts)


def _potential_at(pot: RadialPotential, r: float) -> float:
    for lo, hi, v in pot.pieces():
        if lo <= r <= hi:
            return v
    return 0.0


def _integrate(pot: RadialPotential, l: int, E: np.ndarray, mass: float,
               grid: np.ndarray):
    """RK4 for (u, u') over ``grid``; returns u, u' (normalized) and node counts."""
    E = np.asarray(E, dtype=float)
    r0 = grid[0]
    ll = l * (l + 1)
    if pot.hard_core > 0:
        u = np.zeros_like(E)
        up = np.ones_like(E)
    else:
        # regular series u = r^(l+1) (1 + c1 r^2 + ...), scaled by r^-(l+1)
        V0 = _potential_at(pot, 0.5 * r0)
        kap2 = 2.0 * mass * (V0 - E)
        term = np.ones_like(E)
        s, sp = term.copy(), (l + 1) * term / r0
        for j in range(1, 30):
            term = term * kap2 * r0 * r0 / ((2 * j) * (2 * j + 2 * l + 1))
            s = s + term
            sp = sp + (2 * j + l + 1) * term / r0
            if np.all(np.abs(term) < 1e-17 * np.abs(s)):
                break
        u, up = s, sp
    nodes = np.zeros(E.shape, dtype=int)

    def f(r, V):
        return ll / (r * r) + 2.0 * mass * (V - E)

    Vs = [_potential_at(pot, 0.5 * (a + b)) for a, b in zip(grid[:-1], grid[1:])]
    for a, b, V in zip(grid[:-1], grid[1:], Vs):
        h = b - a
        k1u, k1p = up, f(a, V) * u
        m = a + 0.5 * h
        k2u, k2p = up + 0.5 * h * k1p, f(m, V) * (u + 0.5 * h * k1u)
        k3u, k3p = up + 0.5 * h * k2p, f(m, V) * (u + 0.5 * h * k2u)
        k4u, k4p = up + h * k3p, f(b, V) * (u + h * k3u)
        un = u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        upn = up + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        nodes += (u * un < 0).astype(int)
        # an exact zero at a node is counted when the sign resumes
        scale = np.hypot(un, upn * h)
        scale = np.where(scale > 0, scale, 1.0)
        u, up = un / scale, upn / scale
    return u, up, nodes


def _check_matching(pot: RadialPotential, R: float | None):
    if R is not None and pot.support > 0.9 * R:
        raise MatchingRegionError("impurity potential reaches the outer 10% of the sphere")


def _phase_from_interior(pot, l, E, mass, steps_per_wavelength):
    """(eta_l, theta_l(k r_m), N) at positive energies E (array)."""
    E = np.asarray(E, dtype=float)
    k = np.sqrt(2.0 * mass * E)
    r_m = pot.support
    if r_m == 0.0:
        return np.zeros_like(E), None, None
    grid = _grid(pot, l, float(np.max(k)), mass, steps_per_wavelength)
    u, up, nodes = _integrate(pot, l, E, mass, grid)
    x = k * r_m
    rj, ry = _riccati(l, x)
    rjp, ryp = _riccati_prime(l, x)
    # u = A (rj cos eta - ry sin eta): tan eta = (k rj' u - u' rj) / (k ry' u - u' ry)
    num = k * rjp * u - up * rj
    den = k * ryp * u - up * ry
    eta_mod = np.arctan(num / den)
    theta = riccati_phase(l, x)
    big = theta + eta_mod
    # choose the branch with theta + eta in [N pi, (N + 1) pi)
    big = big + np.floor((nodes * math.pi - big) / math.pi + 1e-12 + 1.0) * math.pi
    big = np.where(big >= (nodes + 1) * math.pi - 1e-12, big - math.pi, big)
    return big - theta, theta, nodes


def radial_phase_shift(V_profile: RadialPotential, E, l: int, mass: float = 1.0,
                       R: float | None = None, steps_per_wavelength: int = 2000):
    """Phase shift eta_l(E) for E > 0 (scalar or array).

    RK4 runs over the potential region with at least
    ``steps_per_wavelength`` steps per local wavelength; the result is
    matched to Riccati-Bessel functions at the potential edge.  With the
    sphere radius ``R`` given, a potential reaching its outer 10% is
    rejected.
    """
    _check_matching(V_profile, R)
    scalar = np.ndim(E) == 0
    E = np.atleast_1d(np.asarray(E, dtype=float))
    if np.any(E <= 0):
        raise ValueError("phase shifts need E > 0")
    if int(l) != l or l < 0:
        raise ValueError("l must be a non-negative integer")
    eta, _, _ = _phase_from_interior(V_profile, int(l), E, mass, steps_per_wavelength)
    return float(eta[0]) if scalar else eta


def square_well_phase_shift(E: float, depth: float, radius: float, mass: float = 1.0,
                            l: int = 0) -> float:
    """Closed-form s-wave (or general-l) phase of a square well, principal branch mod pi."""
    k = math.sqrt(2 * mass * E)
    q = math.sqrt(2 * mass * (E + depth))
    x, y = k * radius, q * radius
    if l == 0:
        return math.atan(k / q * math.tan(y)) - x
    rj, ry = _riccati(l, x)
    rjp, ryp = _riccati_prime(l, x)
    qj, _ = _riccati(l, y)
    qjp, _ = _riccati_prime(l, y)
    L = q * qjp / qj
    return float(math.atan((k * rjp - L * rj) / (k * ryp - L * ry)))


# -- sphere levels -------------------------------------------------------------

@dataclass(frozen=True)
class SphereLevels:
    l: int
    n: np.ndarray        # node label, 1, 2, ... (n - 1 interior zeros)
    E: np.ndarray
    k: np.ndarray        # nan for bound states

    def below(self, E_cut: float) -> int:
        return int(np.sum(self.E < E_cut))


def level_count(V_profile: RadialPotential, R: float, l: int, E, mass: float = 1.0,
                steps_per_wavelength: int = 200) -> np.ndarray:
    """Number of sphere levels of channel l strictly below each E (Sturm count).

    For E > 0 and a potential well inside the sphere the count is
    floor((theta_l(kR) + eta_l) / pi), which tends to
    floor((kR + eta_l - l pi/2) / pi) for kR >> l.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    out = np.zeros(E.shape, dtype=float)
    pos = E > 0
    if np.any(pos):
        out[pos] = _total_phase(V_profile, R, l, E[pos], mass, steps_per_wavelength) / math.pi
    if np.any(~pos):
        out[~pos] = _bound_count(V_profile, R, l, E[~pos], mass, steps_per_wavelength)
    return out


def _total_phase(pot, R, l, E, mass, spw):
    k = np.sqrt(2.0 * mass * E)
    if pot.is_free:
        return riccati_phase(l, k * R)
    eta, _, _ = _phase_from_interior(pot, l, E, mass, spw)
    return riccati_phase(l, k * R) + eta


def _bound_count(pot, R, l, E, mass, spw):
    kap = np.sqrt(-2.0 * mass * np.asarray(E))
    grid = _grid(pot, l, float(np.max(kap)), mass, max(spw, 50), r_end=R)
    if grid.size == 0:
        grid = np.linspace(R * 1e-6, R, 400)
    u, up, nodes = _integrate(pot, l, np.asarray(E), mass, grid)
    return nodes.astype(float) + 0.5  # never integer: no level at E itself


def sphere_levels(V_profile: RadialPotential, R: float, l: int,
                  k_window: tuple[float, float], mass: float = 1.0,
                  include_bound: bool = True, rtol: float = 1e-13,
                  steps_per_wavelength: int = 200) -> SphereLevels:
    """Levels of channel l in the sphere with u(R) = 0.

    Levels with 0 < k in ``k_window`` are returned, plus every bound level
    when ``include_bound``.  Each level carries its node label n, which
    pairs free and perturbed levels one to one.
    """
    _check_matching(V_profile, R)
    k_lo, k_hi = map(float, k_window)
    if not (k_hi > k_lo >= 0):
        raise ValueError("bad k window")
    E_hi = k_hi ** 2 / (2 * mass)
    E_lo = k_lo ** 2 / (2 * mass)
    vmin = min((v for v in V_profile.values), default=0.0)
    E_bottom = min(vmin, 0.0) - 1e-9
    if include_bound and vmin < 0:
        E_lo_search = E_bottom
    else:
        E_lo_search = max(E_lo, 1e-300)

    def count(e):
        return level_count(V_profile, R, l, e, mass, steps_per_wavelength)

    lo_c = int(math.floor(count(E_lo_search)[0]))
    hi_c = int(math.floor(count(E_hi)[0]))
    labels = np.arange(lo_c + 1, hi_c + 1)
    if labels.size == 0:
        return SphereLevels(l, labels, np.array([]), np.array([]))
    a = np.full(labels.shape, E_lo_search)
    b = np.full(labels.shape, E_hi)
    for _ in range(200):
        mid = 0.5 * (a + b)
        c = count(mid)
        below = c < labels  # level n lies above mid
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
        if np.all(b - a <= rtol * np.maximum(1.0, np.abs(b))):
            break
    Es = 0.5 * (a + b)
    keep = (Es > E_lo) | (include_bound & (Es <= 0))
    ks = np.where(Es > 0, np.sqrt(2 * mass * np.maximum(Es, 0)), np.nan)
    return SphereLevels(l, labels[keep], Es[keep], ks[keep])


# -- charges -------------------------------------------------------------------

def build_channels(V_profile: RadialPotential, E_F: float, mass: float = 1.0,
                   tol: float = 1e-6, l_cap: int = 200, R: float | None = None,
                   steps_per_wavelength: int = 2000) -> list[RadialChannel]:
    """eta_l(E_F) for l = 0, 1, ... until max_{E <= E_F} |eta_l| < tol."""
    if not E_F > 0:
        raise ValueError("E_F must be positive")
    probe = E_F * np.array([1.0, 0.75, 0.5, 0.25, 0.1])
    chans = []
    for l in range(l_cap + 1):
        eta = radial_phase_shift(V_profile, probe, l, mass, R, steps_per_wavelength)
        chans.append(RadialChannel(l, float(eta[0]), E_F))
        if np.max(np.abs(eta)) < tol:
            return chans
    raise TruncationError(f"|eta_l| still above {tol} at l = {l_cap}")


@dataclass(frozen=True)
class FriedelResult:
    Q_c: float
    truncation_bound: float
    residual_Z: float | None = None


def friedel_sum(channels: Sequence[RadialChannel], E_F: float | None = None,
                tol: float = 1e-6, Z: int | None = None) -> FriedelResult:
    """(2/pi) sum_l (2l+1) eta_l(E_F) with a bound on the omitted channels.

    The omitted tail is bounded assuming |eta_l| keeps decreasing at least
    geometrically at the rate of the last two retained channels.  ``Z``
    adds the screening residual Q_c - Z to the result.
    """
    if not channels:
        return FriedelResult(0.0, 0.0, None if Z is None else -float(Z))
    chans = sorted(channels, key=lambda c: c.l)
    total = math.fsum((2 * c.l + 1) * c.eta for c in chans) * 2.0 / math.pi
    last = abs(chans[-1].eta)
    if last == 0.0:
        bound = 0.0
    else:
        prev = abs(chans[-2].eta) if len(chans) > 1 else 0.0
        rate = last / prev if prev > 0 else 0.5
        if rate >= 1.0:
            if last > tol:
                raise TruncationError("phase shifts not decreasing at the truncation")
            rate = 0.5
        L = chans[-1].l
        # sum_{j>=1} (2(L+j)+1) last rate^j
        bound = 2.0 / math.pi * last * (
            (2 * L + 1) * rate / (1 - rate) + 2 * rate / (1 - rate) ** 2)
    if bound > tol * max(1.0, abs(total)) and last > tol:
        raise TruncationError(f"truncation bound {bound:.2e} exceeds tolerance")
    res = None if Z is None else total - Z
    return FriedelResult(total, bound, res)


@dataclass(frozen=True)
class DiffuseProfile:
    r: np.ndarray
    radial_density: np.ndarray   # 4 pi r^2 rho_d(r)
    mean_level: float            # -(2 / pi R) sum (2l+1) eta_l


def diffuse_charge(channels: Sequence[RadialChannel], E_F: float, R: float,
                   mass: float = 1.0, r: np.ndarray | None = None):
    """Q_d = -(2/pi) sum (2l+1) eta_l and the asymptotic diffuse profile.

    ``4 pi r^2 rho_d = -(4/pi R) sum (2l+1) eta_l sin^2(k_F r + eta_l - l pi/2)``;
    its integral over (0, R) returns Q_d up to terms of order 1/(k_F R).
    """
    k_F = math.sqrt(2 * mass * E_F)
    Qd = -friedel_sum(channels, E_F).Q_c
    if r is None:
        r = np.linspace(0.0, R, 4001)
    r = np.asarray(r, dtype=float)
    prof = np.zeros_like(r)
    for c in channels:
        prof += (2 * c.l + 1) * c.eta * np.sin(k_F * r + c.eta - c.l * math.pi / 2) ** 2
    prof *= -4.0 / (math.pi * R)
    mean = -2.0 / (math.pi * R) * math.fsum((2 * c.l + 1) * c.eta for c in channels)
    return Qd, DiffuseProfile(r, prof, mean)


@dataclass(frozen=True)
class GasCharges:
    Q: int
    Q_c: int
    Q_d: int
    per_channel: tuple[dict, ...]


def discrete_gas_charges(free_levels: Sequence[SphereLevels],
                         perturbed_levels: Sequence[SphereLevels],
                         E_F: float) -> GasCharges:
    """Integer Q, Q_c, Q_d of the boxed gas, channel weights 2(2l+1).

    In every channel the free levels below E_F stay occupied and are carried
    to the perturbed levels with the same label; E'_F of that channel sits
    midway between the last occupied image and the next level.  Q_d uses
    sign(E'_F - E_F) times the levels between the two Fermi energies.
    """
    free = {s.l: s for s in free_levels}
    pert = {s.l: s for s in perturbed_levels}
    if set(free) != set(pert):
        raise ValueError("free and perturbed channel sets differ")
    Q = Qc = Qd = 0
    rows = []
    for l in sorted(free):
        f, p = free[l], pert[l]
        if np.any(np.isclose(f.E, E_F, rtol=0, atol=1e-12 * max(1.0, abs(E_F)))):
            raise ValueError(f"E_F coincides with a free level in channel l = {l}")
        occ = f.n[f.E < E_F]
        N = occ.size
        if N and (occ.max() != occ.size + f.n.min() - 1):
            raise ValueError("free levels below E_F are not contiguous")
        pmap = dict(zip(p.n.tolist(), p.E.tolist()))
        missing = [n for n in occ.tolist() if n not in pmap]
        if missing:
            raise ValueError(f"perturbed partners missing for labels {missing} (l = {l})")
        top = max(occ.tolist()) if N else f.n.min() - 1
        e_last = pmap[top] if N else -math.inf
        above = [e for n, e in pmap.items() if n > top]
        if not above:
            raise ValueError(f"window too small above E'_F in channel l = {l}")
        e_next = min(above)
        EFp = 0.5 * (e_last + e_next) if N else min(E_F, e_next - 1.0)
        w = 2 * (2 * l + 1)
        n_pert_below_tracked = int(np.sum(p.E < EFp))
        n_pert_below_EF = int(np.sum(p.E < E_F))
        q = w * (n_pert_below_tracked - N)
        qc = w * (n_pert_below_EF - N)
        between = int(np.sum((p.E > min(E_F, EFp)) & (p.E < max(E_F, EFp))))
        qd = w * int(np.sign(EFp - E_F)) * between
        if q != qc + qd:
            raise AssertionError("channel charges do not add up")
        Q, Qc, Qd = Q + q, Qc + qc, Qd + qd
        rows.append({"l": l, "weight": w, "N": N, "E_F_prime": EFp, "Q": q, "Q_c": qc,
                     "Q_d": qd})
    return GasCharges(Q, Qc, Qd, tuple(rows))


def gas_charges(V_profile: RadialPotential, R: float, E_F: float, l_values: Sequence[int],
                mass: float = 1.0, steps_per_wavelength: int = 200) -> GasCharges:
    """Solve free and perturbed sphere levels and count the integer charges."""
    k_F = math.sqrt(2 * mass * E_F)
    k_hi = k_F + 8 * math.pi / R
    free_l, pert_l = [], []
    for l in l_values:
        free_l.append(sphere_levels(RadialPotential.free(), R, l, (0.0, k_hi), mass,
                                    steps_per_wavelength=steps_per_wavelength))
        pert_l.append(sphere_levels(V_profile, R, l, (0.0, k_hi), mass,
                                    steps_per_wavelength=steps_per_wavelength))
    return discrete_gas_charges(free_l, pert_l, E_F)


def fermi_energy_between_levels(R: float, k_request: float, l: int = 0,
                                mass: float = 1.0) -> float:
    """Free-gas E_F midway between two free levels of channel l near k_request."""
    free = sphere_levels(RadialPotential.free(), R, l, (0.0, k_request + 4 * math.pi / R), mass)
    i = int(np.searchsorted(free.E, k_request ** 2 / (2 * mass)))
    i = min(max(i, 1), free.E.size - 1)
    return 0.5 * (free.E[i - 1] + free.E[i])


def depth_sweep(depths: Sequence[float], radius: float, R: float, E_F: float,
                l_values: Sequence[int] = (0,), mass: float = 1.0) -> list[dict]:
    """Integer and continuum Q_c of a square well as its depth varies."""
    rows = []
    for d in depths:
        pot = RadialPotential.square_well(d, radius)
        g = gas_charges(pot, R, E_F, l_values, mass)
        eta = [radial_phase_shift(pot, E_F, l, mass, R) for l in l_values]
        qc_cont = 2.0 / math.pi * math.fsum((2 * l + 1) * e for l, e in zip(l_values, eta))
        rows.append({"depth": float(d), "Q": g.Q, "Qc_int": g.Q_c, "Qd_int": g.Q_d,
                     "Qc_cont": qc_cont})
    return rows
