"""Boxed one-dimensional Dirac equation.

Representation: alpha = sigma_2, beta = sigma_3, so for real E the
spinor psi = (u, v) can be taken real and the stationary equation
``[alpha p + beta (m + S) + V + sigma_1 P] psi = E psi`` reads

    u' = (E - V + M) v - P u
    v' = (M + V - E) u + P v,      M = m + S.

``P`` is a pseudoscalar coupling that only appears after the gauge-like
rotation of :func:`transform_potential`.  On a segment with constant
coefficients the generator has zero trace and squares to a multiple of the
identity, so the propagator is ``cos(q w) + sin(q w)/q A`` (or the
hyperbolic form) with unit determinant.

The wall condition ``(1 + sigma_1 xhat) psi = 0`` fixes ``u = v`` at
``x = -R`` and ``u = -v`` at ``x = +R``.  Writing ``psi = r (cos t, sin t)``,
the angle obeys ``t' = V - E + M cos 2t + P sin 2t`` and is strictly
decreasing in E at the far wall, so ``(3 pi/4 - t(R; E)) / pi`` is an
increasing function whose integer values are the eigenvalues.  That integer
(the node label) is invariant under continuous deformations of the
potential and labels positive free massless levels n = 1, 2, ...
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import MatchingRegionError, SpecError, ZeroModeError
from .model import BoxGeometry, Level, PotentialSpec, Spectrum
from .rootfind import CoarseGridWarning, scan_roots

ZERO_MODE_TOL = 1e-9
_QUARTER = math.pi / 4


@dataclass(frozen=True)
class SpinorState:
    upper: float
    lower: float

    def as_array(self) -> np.ndarray:
        return np.array([self.upper, self.lower], dtype=float)


# -- elementary propagators -------------------------------------------------

def _sinhc(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def transfer_matrix(width, E, S=0.0, V=0.0, mass=0.0, P=0.0) -> np.ndarray:
    """Exact propagator across a constant segment; shape ``E.shape + (2, 2)``."""
    E = np.asarray(E, dtype=float)
    M = mass + S
    a = E - V + M
    b = M + V - E
    disc = P * P + a * b
    q = np.sqrt(np.abs(disc)) * width
    osc = disc < 0
    c = np.where(osc, np.cos(q), np.cosh(np.where(osc, 0.0, q)))
    s = width * np.where(osc, np.sinc(q / np.pi), _sinhc(np.where(osc, 0.0, q)))
    T = np.empty(E.shape + (2, 2))
    T[..., 0, 0] = c - s * P
    T[..., 0, 1] = s * a
    T[..., 1, 0] = s * b
    T[..., 1, 1] = c + s * P
    return T


def delta_matrix(strength: float) -> np.ndarray:
    """Jump matrix for ``strength * delta(x - x0)`` in V: a rotation by ``strength``."""
    c, s = math.cos(strength), math.sin(strength)
    return np.array([[c, -s], [s, c]])


def transfer_step(state: SpinorState, segment: tuple[float, float, float], E: float,
                  mass: float = 0.0) -> SpinorState:
    """Propagate ``state`` across a segment ``(width, S, V)`` at energy E."""
    width, S, V = segment
    if width < 0:
        raise ValueError("segment width must be non-negative")
    T = transfer_matrix(width, E, S, V, mass)
    u, v = T @ state.as_array()
    return SpinorState(float(u), float(v))


def delta_jump(state: SpinorState, strength: float) -> SpinorState:
    """Apply the exact point interaction of a vector delta term."""
    u, v = delta_matrix(strength) @ state.as_array()
    return SpinorState(float(u), float(v))


# -- propagation with a continuous angle ------------------------------------

def _events(spec: PotentialSpec, x_from: float, x_to: float):
    """Ordered ('seg', width, S, V) / ('pt', strength) items on (x_from, x_to].

    Segments are split at point terms; a jump at x0 comes after the piece
    ending at x0.  Point terms sitting exactly at ``x_from`` are excluded.
    """
    pts = sorted((p for p in spec.point_terms if x_from < p.x0 <= x_to), key=lambda p: p.x0)
    items = []  # (position, order, event)
    for s in spec.segments:
        lo, hi = max(s.x_left, x_from), min(s.x_right, x_to)
        if hi <= lo:
            continue
        edges = [lo, *[p.x0 for p in pts if lo < p.x0 < hi], hi]
        for e0, e1 in zip(edges[:-1], edges[1:]):
            items.append((e1, 0, ("seg", e1 - e0, s.S, s.V)))
    for p in pts:
        items.append((p.x0, 1, ("pt", p.strength)))
    items.sort(key=lambda t: (t[0], t[1]))
    return [ev for _, _, ev in items]


def _wrap(d):
    return (d + np.pi) % (2 * np.pi) - np.pi


def propagate(spec: PotentialSpec, E, x_from: float, x_to: float, psi0,
              theta0: float | None = None, track_angle: bool = True):
    """Propagate ``psi0`` from ``x_from`` to ``x_to`` for every energy in ``E``.

    ``x_to < x_from`` integrates backwards with the exact inverse
    propagators.  Returns ``(psi, theta)`` where ``psi`` has shape
    ``E.shape + (2,)`` and is normalized to unit length, and ``theta`` is
    the continuously tracked polar angle (``None`` when ``track_angle`` is
    false).
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    psi = np.broadcast_to(np.asarray(psi0, dtype=float), E.shape + (2,)).copy()
    psi /= np.linalg.norm(psi, axis=-1, keepdims=True)
    theta = None
    if track_angle:
        start = math.atan2(psi0[1], psi0[0])
        t0 = start if theta0 is None else theta0
        theta = np.full(E.shape, t0)
    if x_to >= x_from:
        events, sgn = _events(spec, x_from, x_to), 1.0
    else:
        # points at x_to belong to the region left of it
        events, sgn = _events(spec, x_to, x_from)[::-1], -1.0
    m = spec.mass
    for ev in events:
        if ev[0] == "pt":
            T = delta_matrix(sgn * ev[1])
            psi = psi @ T.T
            if track_angle:
                theta = theta + sgn * ev[1]
            continue
        _, width, S, V = ev
        if width <= 0:
            continue
        M = m + S
        nsub = 1
        if track_angle:
            # keep the angle change per substep below pi
            qmax = float(np.max(np.sqrt(np.maximum((E - V) ** 2 - M * M, 0.0))))
            nsub = max(1, int(math.ceil(qmax * width / _QUARTER)))
        # avoid cosh overflow in long forbidden stretches
        kmax = float(np.max(np.sqrt(np.maximum(M * M - (E - V) ** 2, 0.0))))
        nsub = max(nsub, int(math.ceil(kmax * width / 30.0)))
        T = transfer_matrix(sgn * width / nsub, E, S, V, m)
        for _ in range(nsub):
            new = np.einsum("...ij,...j->...i", T, psi)
            new /= np.linalg.norm(new, axis=-1, keepdims=True)
            if track_angle:
                d = np.arctan2(new[..., 1], new[..., 0]) - np.arctan2(psi[..., 1], psi[..., 0])
                theta = theta + _wrap(d)
            psi = new
    return psi, theta


_LEFT_WALL = np.array([1.0, 1.0]) / math.sqrt(2.0)
_RIGHT_WALL = np.array([1.0, -1.0]) / math.sqrt(2.0)


def matching_point(spec: PotentialSpec, box: BoxGeometry) -> float:
    """Where the solutions started at the two walls are compared.

    The centre of the region carrying the potential, so that solutions
    decaying away from a bound state are never integrated against their
    growing partner over long distances.
    """
    xs = [x for s in spec.segments if s.S != 0 or s.V != 0 for x in (s.x_left, s.x_right)]
    xs += [p.x0 for p in spec.point_terms]
    if not xs:
        return 0.0
    return 0.5 * (min(xs) + max(xs))


def _wall_solutions(spec: PotentialSpec, box: BoxGeometry, E, track_angle=True, walls=None):
    xc = matching_point(spec, box)
    if walls is None:
        left, right = _LEFT_WALL, _RIGHT_WALL
    else:
        left = np.array([math.cos(walls[0]), math.sin(walls[0])])
        right = np.array([math.cos(walls[1]), math.sin(walls[1])])
    psi_l, th_l = propagate(spec, E, -box.R, xc, left, track_angle=track_angle)
    psi_r, th_r = propagate(spec, E, box.R, xc, right, track_angle=track_angle)
    return psi_l, th_l, psi_r, th_r


def solve_with_walls(spec: PotentialSpec, box: BoxGeometry, left_angle: float,
                     right_angle: float, window: tuple[float, float],
                     rtol: float = 1e-12) -> np.ndarray:
    """Eigenvalues for general linear wall conditions.

    The spinor at -R must point along angle ``left_angle`` and the one at
    +R along ``right_angle`` (each up to sign).  The MIT walls are pi/4 and
    -pi/4.
    """
    walls = (left_angle, right_angle)

    def det(e):
        pl, _, pr, _ = _wall_solutions(spec, box, e, track_angle=False, walls=walls)
        return pl[..., 0] * pr[..., 1] - pl[..., 1] * pr[..., 0]

    def count(e):
        _, tl, _, tr = _wall_solutions(spec, box, e, track_angle=True, walls=walls)
        return (tr - tl) / math.pi

    step = math.pi / (8 * box.R)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseGridWarning)
        return scan_roots(det, window, step, rtol=rtol, count=count)


def boundary_determinant(E, spec: PotentialSpec, box: BoxGeometry):
    """Matching determinant of the two wall solutions.

    ``psi_L`` obeys the wall condition at -R and ``psi_R`` the one at +R;
    both are normalized to unit length at the matching point, where the
    value returned is ``u_L v_R - v_L u_R``.  It is bounded by one and
    vanishes exactly at the eigenvalues.  Accepts a scalar or an array.
    """
    scalar = np.ndim(E) == 0
    pl, _, pr, _ = _wall_solutions(spec, box, E, track_angle=False)
    d = pl[..., 0] * pr[..., 1] - pl[..., 1] * pr[..., 0]
    return float(d[0]) if scalar else d


def level_index(E, spec: PotentialSpec, box: BoxGeometry):
    """Continuous node label; integer exactly at eigenvalues, increasing in E."""
    scalar = np.ndim(E) == 0
    _, th_l, _, th_r = _wall_solutions(spec, box, E, track_angle=True)
    n = (th_r - th_l) / math.pi + 1.0
    return float(n[0]) if scalar else n


def solve_spectrum(spec: PotentialSpec, box: BoxGeometry, window: tuple[float, float],
                   grid_step: float | None = None, rtol: float = 1e-12,
                   residual_tol: float = 1e-8, allow_zero_mode: bool = False) -> Spectrum:
    """All eigenvalues in ``window``.

    Sign changes of :func:`boundary_determinant` are bracketed on a grid of
    spacing ``grid_step`` (default pi/(8R)) and bisected to
    ``rtol * max(1, |E|)``.  The node label is evaluated on the same grid;
    cells it reports as holding several roots are refined with a warning.
    Raises :class:`ZeroModeError` for a level with |E| < 1e-9.
    """
    E_min, E_max = map(float, window)
    if not (math.isfinite(E_min) and math.isfinite(E_max) and E_max > E_min):
        raise ValueError(f"bad window {window!r}")
    step = grid_step if grid_step is not None else math.pi / (8 * box.R)
    step = min(step, math.pi / (8 * box.R))
    roots = scan_roots(lambda e: boundary_determinant(e, spec, box), (E_min, E_max), step,
                       rtol=rtol, count=lambda e: level_index(e, spec, box))
    levels = _describe_levels(roots, spec, box, residual_tol)
    if not allow_zero_mode:
        for lv in levels:
            if abs(lv.E) < ZERO_MODE_TOL:
                raise ZeroModeError(
                    f"accidental zero mode at E = {lv.E:.3e}; zero modes are excluded")
    return Spectrum(tuple(levels), (E_min, E_max))


def _describe_levels(roots, spec, box, residual_tol):
    if len(roots) == 0:
        return []
    pl, th_l, pr, th_r = _wall_solutions(spec, box, roots, track_angle=True)
    labels = np.rint((th_r - th_l) / math.pi + 1.0).astype(int)
    resid = pl[..., 0] * pr[..., 1] - pl[..., 1] * pr[..., 0]
    # parity read off at x = 0: u even and v odd for the positive sector
    even = spec.is_even() and matching_point(spec, box) == 0.0
    levels = []
    # a point term at the origin rotates psi(0+) by half its strength
    half = 0.5 * sum(p.strength for p in spec.point_terms if p.x0 == 0.0)
    for E, r, lab, (u, v) in zip(roots, resid, labels, pl):
        if abs(r) > residual_tol:
            raise RuntimeError(f"root at E = {E} has residual {r:.2e} above {residual_tol}")
        a = math.atan2(v, u) - half
        parity = ("+" if abs(math.cos(a)) > abs(math.sin(a)) else "-") if even else "none"
        levels.append(Level(float(E), parity, float(r), int(lab)))
    return levels


def wavefunction(spec: PotentialSpec, box: BoxGeometry, E: float, x: np.ndarray) -> np.ndarray:
    """Normalized eigenfunction sampled at sorted points ``x``; shape (len(x), 2)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((x.size, 2))
    psi = _LEFT_WALL.copy()
    x_prev = -box.R
    for i, xi in enumerate(x):
        T = segment_product(spec, E, x_prev, xi)
        psi = T @ psi
        out[i] = psi
        x_prev = xi
    norm = np.sqrt(trapezoid(np.sum(out ** 2, axis=1), x)) if x.size > 1 else 1.0
    return out / norm


def segment_product(spec: PotentialSpec, E: float, x_from: float, x_to: float) -> np.ndarray:
    """Exact 2x2 transfer matrix from ``x_from`` to ``x_to`` (forward only)."""
    T = np.eye(2)
    for ev in _events(spec, x_from, x_to):
        if ev[0] == "pt":
            T = delta_matrix(ev[1]) @ T
        else:
            T = transfer_matrix(ev[1], E, ev[2], ev[3], spec.mass) @ T
    return T


# -- phase shifts -----------------------------------------------------------

@dataclass(frozen=True)
class PhaseShiftTable:
    E: np.ndarray
    eta_plus: np.ndarray
    eta_minus: np.ndarray

    @property
    def eta_total(self) -> np.ndarray:
        return self.eta_plus + self.eta_minus

    @property
    def entries(self):
        return list(zip(self.E, self.eta_plus, self.eta_minus, self.eta_total))

    def branch(self, sign: int) -> "PhaseShiftTable":
        sel = np.sign(self.E) == sign
        order = np.argsort(self.E[sel])
        return PhaseShiftTable(self.E[sel][order], self.eta_plus[sel][order],
                               self.eta_minus[sel][order])


def _lift(theta, c):
    """Continuous phi with atan2(c sin phi, cos phi) following theta (c != 0)."""
    theta = np.asarray(theta, dtype=float)
    c = np.asarray(c, dtype=float)
    sgn = np.sign(c)
    th = sgn * theta
    ac = np.abs(c)
    return th + _wrap(np.arctan2(np.sin(th) / ac, np.cos(th)) - th)


def _check_matching_region(spec: PotentialSpec, box: BoxGeometry):
    if spec.support() > 0.9 * box.R:
        raise MatchingRegionError(
            "potential reaches the matching region (outer 10% of the box must be free)")


def phase_shifts(spec: PotentialSpec, box: BoxGeometry, E):
    """Parity phase shifts ``(eta_plus, eta_minus)`` at energies |E| > m.

    The solution of given parity is started at x = 0+ and propagated to the
    middle of the potential-free matching region, where its continuously
    tracked angle is converted to the phase of the free asymptotic form.
    The branch is the one continuous under switching the potential on from
    zero, which coincides with the branch continuous in E that tends to the
    Born value at large |E|.
    """
    if not spec.is_even():
        raise SpecError("partial-wave phase shifts need an even potential")
    _check_matching_region(spec, box)
    scalar = np.ndim(E) == 0
    E = np.atleast_1d(np.asarray(E, dtype=float))
    m = spec.mass
    if np.any(np.abs(E) <= m):
        raise ValueError("phase shifts need |E| > m")
    k = np.sqrt(E * E - m * m)
    L0 = sum(p.strength for p in spec.point_terms if p.x0 == 0.0)
    x_m = 0.95 * box.R
    eta = []
    for start in (0.5 * L0, 0.5 * (math.pi + L0)):
        psi0 = np.array([math.cos(start), math.sin(start)])
        _, theta = propagate(spec, E, 0.0, x_m, psi0, theta0=start)
        if start == 0.5 * L0:
            phi = _lift(theta, -k / (E + m))
        else:
            phi = _lift(0.5 * math.pi - theta, k / (E - m))
        eta.append(phi - k * x_m)
    ep, em = eta
    if scalar:
        return float(ep[0]), float(em[0])
    return ep, em


def phase_shift_table(spec: PotentialSpec, box: BoxGeometry, energies) -> PhaseShiftTable:
    """Phase shifts on an energy grid with the branch pinned at the largest |E|.

    Along each sign of E the table is unwrapped (period pi) starting from the
    largest |E| sampled; that starting value must lie within pi/2 of the
    Born value there.
    """
    E = np.sort(np.asarray(energies, dtype=float))
    ep, em = phase_shifts(spec, box, E)
    ep, em = np.array(ep, ndmin=1), np.array(em, ndmin=1)
    for sign in (-1, 1):
        sel = np.nonzero(np.sign(E) == sign)[0]
        if sel.size == 0:
            continue
        order = sel[np.argsort(-np.abs(E[sel]))]
        born = born_phase_shift(spec, E[order[0]])
        tot = ep[order[0]] + em[order[0]]
        if abs(tot - born) > math.pi / 2 and abs(E[order[0]]) > 10 * max(1.0, spec.mass):
            warnings.warn(f"phase shift {tot:.4f} far from Born value {born:.4f} at "
                          f"E = {E[order[0]]:.3g}", RuntimeWarning, stacklevel=2)
        for arr in (ep, em):
            arr[order] = np.unwrap(arr[order], period=math.pi)
    return PhaseShiftTable(E, ep, em)


def born_phase_shift(spec: PotentialSpec, E):
    """High-energy phase shift -(1/k) * integral of (E V + m S)."""
    E = np.asarray(E, dtype=float)
    m = spec.mass
    if np.any(np.abs(E) <= m):
        raise ValueError("Born phase shift needs |E| > m")
    k = np.sqrt(E * E - m * m)
    val = -(E * spec.integral_V() + m * spec.integral_S()) / k
    return float(val) if val.ndim == 0 else val


def born_asymptotes(spec: PotentialSpec) -> tuple[float, float]:
    """``(eta(+inf), eta(-inf)) = (-int V, +int V)``."""
    iv = spec.integral_V()
    return -iv, iv


# -- the delta-function model ------------------------------------------------

def delta_model_phase_shifts(E, m: float, lam: float):
    """Closed-form ``tan eta_pm = ((E +- m)/k) tan(lam)`` on the continuous branch.

    The branch tends to ``+lam`` per channel as E -> +inf and ``-lam`` as
    E -> -inf.
    """
    scalar = np.ndim(E) == 0
    E = np.atleast_1d(np.asarray(E, dtype=float))
    if np.any(np.abs(E) <= m):
        raise ValueError("delta-model phase shifts need |E| > m")
    k = np.sqrt(E * E - m * m)
    base = math.atan2(math.sin(lam), math.cos(lam))
    turns = lam - base
    out = []
    for sgn in (1.0, -1.0):
        c = (E + sgn * m) / k
        eta = np.arctan2(c * math.sin(lam), math.cos(lam)) + np.sign(E) * turns
        out.append(eta)
    if scalar:
        return float(out[0][0]), float(out[1][0])
    return out[0], out[1]


@dataclass(frozen=True)
class BoundState:
    E: float
    kappa: float
    mass: float

    def profile(self, x) -> np.ndarray:
        """Normalized two-component wave function on the infinite line."""
        x = np.asarray(x, dtype=float)
        E, m, kap = self.E, self.mass, self.kappa
        norm = math.sqrt(kap * (E + m) / (2 * m))
        env = norm * np.exp(-kap * np.abs(x))
        return np.stack([env, -np.sign(x) * kap / (E + m) * env], axis=-1)


def delta_model_bound_state(m: float, lam: float) -> BoundState:
    """Positive-parity bound state of ``V = -2 lam delta(x)``: E = m cos(2 lam).

    Exists for lam (mod pi) in (0, pi/2), the attractive branch.  A level
    at E = 0 (lam = pi/4) is rejected as an accidental zero mode.
    """
    if not m > 0:
        raise ValueError("bound state needs m > 0")
    lr = lam % math.pi
    if not 0 < lr < math.pi / 2:
        raise ValueError("no positive-parity bound state: need lam mod pi in (0, pi/2)")
    E = m * math.cos(2 * lam)
    if abs(E) < ZERO_MODE_TOL * max(1.0, m):
        raise ZeroModeError("accidental zero mode excluded (cos 2 lam = 0)")
    kappa = m * abs(math.sin(2 * lam))
    return BoundState(E, kappa, m)


def narrow_well_spec(box: BoxGeometry, lam: float, width: float, mass: float = 0.0):
    """Square vector well of width ``width`` with the same integral as -2 lam delta."""
    return PotentialSpec.square_well(box, width / 2, V=-2 * lam / width, mass=mass)


# -- the V-eliminating rotation ---------------------------------------------

@dataclass(frozen=True)
class RotatedPiece:
    x_left: float
    x_right: float
    M: float       # m + S on the piece
    f_left: float  # rotation angle at x_left
    slope: float   # df/dx on the piece (= V)
    V_res: float   # vector potential left after the rotation

    def coefficients(self, x):
        f = self.f_left + self.slope * (x - self.x_left)
        return self.M * np.cos(2 * f), -self.M * np.sin(2 * f)


@dataclass(frozen=True)
class TransformedHamiltonian:
    """``H_f = exp(i alpha f) H exp(-i alpha f)`` with df/dx = V.

    Carries the rotated scalar and pseudoscalar couplings ``M cos 2f`` and
    ``-M sin 2f`` piece by piece, and the wall angles ``f(-R)``, ``f(R)``
    that rotate the bag condition.  ``psi = R(f) psi_f`` with ``R`` the
    rotation matrix.
    """

    pieces: tuple[RotatedPiece, ...]
    f_left_wall: float
    f_right_wall: float
    R: float

    @property
    def is_free(self) -> bool:
        return all(p.M == 0 and p.V_res == 0 for p in self.pieces)

    def left_state(self) -> np.ndarray:
        f = self.f_left_wall
        return delta_matrix(-f) @ _LEFT_WALL

    def right_residual(self, psi) -> np.ndarray:
        f = self.f_right_wall
        row = np.array([1.0, 1.0]) @ delta_matrix(f)
        return psi @ row


def transform_potential(spec: PotentialSpec, box: BoxGeometry,
                        mode: str = "eliminate-V") -> TransformedHamiltonian:
    """Rotate V away: f(-R) = 0, f' = V, f jumps by L at each point term."""
    if mode != "eliminate-V":
        raise ValueError(f"unknown mode {mode!r}")
    pieces = []
    f = 0.0
    for ev_x, ev in _positioned_events(spec, -box.R, box.R):
        if ev[0] == "pt":
            f += ev[1]
            continue
        _, width, S, V = ev
        pieces.append(RotatedPiece(ev_x, ev_x + width, spec.mass + S, f, V, 0.0))
        f += V * width
    return TransformedHamiltonian(tuple(pieces), 0.0, f, box.R)


def _positioned_events(spec, x_from, x_to):
    x = x_from
    out = []
    for ev in _events(spec, x_from, x_to):
        out.append((x, ev))
        if ev[0] == "seg":
            x += ev[1]
    return out


def _rotated_rhs(piece: RotatedPiece, E: np.ndarray):
    def rhs(x, y):
        Mf, P = piece.coefficients(x)
        u, v = y[0::2], y[1::2]
        a = E - piece.V_res + Mf
        b = Mf + piece.V_res - E
        out = np.empty_like(y)
        out[0::2] = a * v - P * u
        out[1::2] = b * u + P * v
        return out
    return rhs


def transformed_determinant(E, th: TransformedHamiltonian, rtol: float = 1e-12):
    """Wall residual of the rotated problem (integrated independently)."""
    from scipy.integrate import solve_ivp

    scalar = np.ndim(E) == 0
    E = np.atleast_1d(np.asarray(E, dtype=float))
    psi = np.tile(th.left_state(), (E.size, 1))
    for pc in th.pieces:
        w = pc.x_right - pc.x_left
        if pc.M == 0 or pc.slope == 0:
            Mf, P = pc.coefficients(pc.x_left)
            T = transfer_matrix(w, E, 0.0, pc.V_res, float(Mf), float(P))
            psi = np.einsum("...ij,...j->...i", T, psi)
        else:
            sol = solve_ivp(_rotated_rhs(pc, E), (pc.x_left, pc.x_right), psi.ravel(),
                            method="DOP853", rtol=rtol, atol=1e-14)
            if not sol.success:
                raise RuntimeError(sol.message)
            psi = sol.y[:, -1].reshape(E.size, 2)
        psi = psi / np.linalg.norm(psi, axis=-1, keepdims=True)
    d = th.right_residual(psi)
    return float(d[0]) if scalar else d


def solve_transformed_spectrum(th: TransformedHamiltonian, window: tuple[float, float],
                               grid_step: float | None = None, rtol: float = 1e-12) -> np.ndarray:
    """Eigenvalues of the rotated problem by scan and bisection."""
    step = grid_step if grid_step is not None else math.pi / (16 * th.R)
    return scan_roots(lambda e: transformed_determinant(e, th), window, step, rtol=rtol)
