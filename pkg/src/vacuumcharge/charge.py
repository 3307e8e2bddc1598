"""Fermi-energy tracking and the integer and continuum vacuum charges.

Counting follows hole theory on a boxed spectrum.  The potential is
switched on as ``g * U`` with g running from 0 to 1; every free level is
followed to its perturbed image (a :class:`LevelLedger`), and a free
cutoff E_F < 0 is carried along to its image E'_F.  The sea is the set of
images of the free negative levels; a level that dives through zero is left
empty unless ``fill_by_hand`` is requested.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from scipy.integrate import trapezoid

from .dirac import (PhaseShiftTable, born_phase_shift, phase_shift_table, segment_product,
                    solve_spectrum)
from .errors import ScheduleTooCoarseError, TruncationError, WindowError
from .rootfind import CoarseGridWarning
from .model import (BoxGeometry, ChargeDecomposition, FermiWindow, LevelLedger, LevelPair,
                    PotentialSpec)


@dataclass(frozen=True)
class ContinuationSchedule:
    """Coupling grid g = 0, 1/N, ..., 1 with adaptive refinement.

    A step whose level displacement reaches half the local spacing is
    halved, at most ``max_halvings`` times, before
    :class:`ScheduleTooCoarseError` is raised.  With ``adaptive=False`` the
    first such step raises immediately.
    """

    steps: int = 8
    max_halvings: int = 10
    adaptive: bool = True

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("the schedule needs at least one step")

    @property
    def couplings(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, int(self.steps) + 1)


@dataclass
class ContinuationReport:
    couplings: list = field(default_factory=list)
    max_ratio: float = 0.0  # largest displacement / half local spacing seen
    halvings: int = 0


def _pad(spec: PotentialSpec, box: BoxGeometry) -> float:
    vmax = max((abs(s.V) for s in spec.segments), default=0.0)
    smax = max((abs(s.S) for s in spec.segments), default=0.0)
    lsum = sum(abs(p.strength) for p in spec.point_terms)
    return vmax + smax + (lsum + 2 * math.pi) / box.R


def _step_spectrum(spec, box, g, window):
    with warnings.catch_warnings():
        # crowded cells near the mass gap are refined automatically
        warnings.simplefilter("ignore", CoarseGridWarning)
        sp = solve_spectrum(spec.scaled(g), box, window)
    return {lv.label: lv for lv in sp.levels}


def _nearest_ok(prev: dict, new: dict, core: set):
    """Nearest-continuation map from ``prev`` to ``new`` within each sector.

    Returns (mapping label -> label, worst ratio).  The ratio is the largest
    displacement divided by half the local spacing; >= 1 means too coarse.
    """
    by_sector: dict[str, list] = {}
    for lab, lv in new.items():
        by_sector.setdefault(lv.parity, []).append((lv.E, lab))
    for v in by_sector.values():
        v.sort()
    mapping, worst = {}, 0.0
    for lab, lv in prev.items():
        cand = by_sector.get(lv.parity, [])
        if not cand:
            if lab in core:
                return None, math.inf
            continue
        Es = np.array([c[0] for c in cand])
        j = int(np.argmin(np.abs(Es - lv.E)))
        gaps = []
        if j > 0:
            gaps.append(Es[j] - Es[j - 1])
        if j + 1 < Es.size:
            gaps.append(Es[j + 1] - Es[j])
        spacing = min(gaps) if gaps else math.inf
        ratio = abs(Es[j] - lv.E) / (0.5 * spacing)
        if lab in core:
            worst = max(worst, ratio)
        mapping[lab] = cand[j][1]
    return mapping, worst


def match_levels(spec: PotentialSpec, box: BoxGeometry, window: tuple[float, float],
                 schedule: ContinuationSchedule | None = None,
                 report: ContinuationReport | None = None) -> LevelLedger:
    """Follow every level through the coupling continuation.

    Each step is solved on the window padded by a bound on the level
    displacement; levels are carried forward by nearest continuation inside
    their parity sector and cross-checked against the node label, which is
    a deformation invariant.  The ledger holds every path whose free or
    perturbed end lies inside ``window``.

    Raises :class:`ScheduleTooCoarseError` when a step cannot be refined
    below half the local spacing, :class:`ZeroModeError` when a level sits
    at |E| < 1e-9 at any step and :class:`WindowError` when a tracked path
    leaves the padded window.
    """
    schedule = schedule or ContinuationSchedule()
    report = report if report is not None else ContinuationReport()
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError("empty window")
    pad = _pad(spec, box)
    padded = (lo - pad, hi + pad)
    free = _step_spectrum(spec, box, 0.0, padded)
    core = {lab for lab, lv in free.items() if lo < lv.E < hi}
    paths = {lab: lab for lab in free}  # free label -> current label
    current = free
    g_prev = 0.0
    report.couplings.append(0.0)
    for g_target in schedule.couplings[1:]:
        while g_prev < g_target:
            dg = g_target - g_prev
            halvings = 0
            while True:
                g = min(g_prev + dg, g_target)
                new = _step_spectrum(spec, box, g, padded)
                live = {lab for lab, cur in paths.items() if lab in core}
                core_now = {paths[lab] for lab in live}
                mapping, worst = _nearest_ok(current, new, core_now)
                ok = mapping is not None and worst < 1.0
                if ok:
                    # nearest continuation must agree with the node label
                    ok = all(mapping.get(c) == c for c in core_now)
                if ok:
                    break
                if not schedule.adaptive or halvings >= schedule.max_halvings:
                    raise ScheduleTooCoarseError(
                        f"continuation step at g = {g:.6g} moves a level by "
                        f"{worst:.3g} x half the local spacing")
                dg *= 0.5
                halvings += 1
                report.halvings += 1
            report.max_ratio = max(report.max_ratio, worst)
            report.couplings.append(g)
            for lab in list(paths):
                cur = paths[lab]
                if cur in new:
                    paths[lab] = cur
                elif lab in core:
                    raise WindowError(f"level path {lab} left the padded window")
                else:
                    del paths[lab]
            current = new
            g_prev = g
    final = current
    pairs = []
    for lab, cur in sorted(paths.items()):
        if cur not in final:
            continue
        Ef, Ep = free[lab].E, final[cur].E
        if lo < Ef < hi or lo < Ep < hi:
            if lab not in free or cur not in final:
                raise WindowError(f"path {lab} is not resolved at both ends")
            pairs.append(LevelPair(Ef, Ep, free[lab].parity, int(lab)))
    missing = [lab for lab, lv in final.items() if lo < lv.E < hi
               and lab not in paths.values()]
    if missing:
        raise WindowError(f"perturbed levels {missing} have no free partner in the window")
    return LevelLedger(tuple(pairs), (lo, hi))


# -- Fermi window and integer charges ---------------------------------------

def _separating_cut(below, above):
    """Midpoint between max(below) and min(above), or None if they overlap."""
    if not below or not above:
        return None
    a, b = max(below), min(above)
    return 0.5 * (a + b) if a < b else None


def fermi_window(ledger: LevelLedger, E_F: float, margin_levels: int = 2) -> FermiWindow:
    """Snap E_F to the midpoint of its free gap and track its images.

    E'_F separates the images of the free levels below E_F from those
    above it, and E''_F does the same for the free cutoff |E_F|.  When
    levels of different sectors cross right at the cut, the next gap
    further out is used.
    """
    if not E_F < 0:
        raise ValueError("E_F must be negative")
    pairs = ledger.sorted_pairs()
    free = np.array([p.E_free for p in pairs])
    lo, hi = ledger.window

    def tracked(cut_request, side):
        # candidate free gaps ordered by distance from the request
        mids = 0.5 * (free[:-1] + free[1:])
        order = np.argsort(np.abs(mids - cut_request))
        for i in order:
            cut = float(mids[i])
            if side < 0 and not cut < 0 or side > 0 and not cut > 0:
                continue
            below = [p.E_perturbed for p in pairs if p.E_free < cut]
            above = [p.E_perturbed for p in pairs if p.E_free > cut]
            # need full coverage around the cut inside the ledger window
            if (sum(e < cut for e in free) < margin_levels
                    or sum(e > cut for e in free) < margin_levels):
                continue
            img = _separating_cut(below, above)
            if img is None:
                continue
            if not (lo < min(cut, img) and max(cut, img) < hi):
                continue
            return cut, img
        raise WindowError(f"no trackable free gap near {cut_request} inside the ledger window")

    cut, img = tracked(E_F, -1)
    cut2, img2 = tracked(-cut, +1)
    if abs(cut2 + cut) > 1e-9 * max(1.0, abs(cut)):
        # free spectrum not symmetric about zero: |E_F| is snapped separately
        pass
    return FermiWindow(cut, img, img2)


def _occupied(ledger: LevelLedger, fill_by_hand: bool):
    occ = [p for p in ledger.pairs if p.E_free < 0]
    if fill_by_hand:
        occ += list(ledger.dives)
    return occ


def _check_fermi(ledger: LevelLedger, fermi: FermiWindow):
    lo, hi = ledger.window
    if not (lo < min(fermi.E_F, fermi.E_F_prime) and max(fermi.E_F_doubleprime, -fermi.E_F) < hi):
        raise WindowError("Fermi window not covered by the ledger window")
    below = [p.E_perturbed for p in ledger.pairs if p.E_free < fermi.E_F]
    above = [p.E_perturbed for p in ledger.pairs if p.E_free > fermi.E_F]
    if (below and max(below) >= fermi.E_F_prime) or (above and min(above) <= fermi.E_F_prime):
        raise ValueError("E'_F is not the tracked image of E_F for this ledger")


def _literal_counts(ledger: LevelLedger, fermi: FermiWindow):
    pert = [p.E_perturbed for p in ledger.pairs]
    free = [p.E_free for p in ledger.pairs]
    EF, EFp, EFpp = fermi.E_F, fermi.E_F_prime, fermi.E_F_doubleprime
    n_free = sum(EF < e < 0 for e in free)
    n_pert_tracked = sum(EFp < e < 0 for e in pert)
    n_pert_cut = sum(EF < e < 0 for e in pert)
    n_pert_pos = sum(0 < e < EFpp for e in pert)
    n_between = sum(min(EF, EFp) < e < max(EF, EFp) for e in pert)
    sgn = int(np.sign(EF - EFp))
    return {
        "Q": n_pert_tracked - n_free,
        "Qc": n_pert_cut - n_free,
        "Qd": sgn * n_between,
        "Q_eq27_twice": n_pert_tracked - n_pert_pos,
        "Qc_eq29_twice": n_pert_cut - sum(0 < e < abs(EF) for e in pert),
    }


def total_charge(ledger: LevelLedger, fermi: FermiWindow, fill_by_hand: bool = False) -> int:
    """Occupied perturbed levels above E'_F minus occupied free levels above E_F.

    With every free negative level tracked to its image the result is zero;
    a dived level filled by hand adds one each.  The energy-sign form
    (perturbed levels in (E'_F, 0) minus free levels in (E_F, 0)) and its
    half-sum rewrite with E''_F are evaluated alongside and must agree with
    each other.
    """
    _check_fermi(ledger, fermi)
    occ = _occupied(ledger, fill_by_hand)
    n_free = sum(fermi.E_F < p.E_free < 0 for p in ledger.pairs)
    Q = sum(p.E_perturbed > fermi.E_F_prime for p in occ) - n_free
    lit = _literal_counts(ledger, fermi)
    if 2 * lit["Q"] != lit["Q_eq27_twice"]:
        raise AssertionError(
            f"half-sum form {lit['Q_eq27_twice']}/2 differs from level count {lit['Q']}")
    if lit["Q"] != len(ledger.dives) - len(ledger.rises):
        raise AssertionError("energy-sign count disagrees with the sign flips of the ledger")
    return int(Q)


def charge_split(ledger: LevelLedger, fermi: FermiWindow,
                 fill_by_hand: bool = False) -> ChargeDecomposition:
    """Integer concentrated and diffuse charges, Q = Q_c + Q_d.

    Q_c counts occupied perturbed levels above the free cutoff E_F against
    the free ones; Q_d = sign(E_F - E'_F) times the occupied levels between
    E_F and E'_F.  The energy-sign variants and the symmetric half-sum form
    of Q_c are reported in ``method_tags``.
    """
    Q = total_charge(ledger, fermi, fill_by_hand)
    occ = _occupied(ledger, fill_by_hand)
    EF, EFp = fermi.E_F, fermi.E_F_prime
    n_free = sum(EF < p.E_free < 0 for p in ledger.pairs)
    Qc = sum(p.E_perturbed > EF for p in occ) - n_free
    sgn = int(np.sign(EF - EFp))
    Qd = sgn * sum(min(EF, EFp) < p.E_perturbed < max(EF, EFp) for p in occ)
    lit = _literal_counts(ledger, fermi)
    if lit["Qc"] + lit["Qd"] != lit["Q"]:
        raise AssertionError("energy-sign decomposition does not add up")
    tags = {
        "fill_by_hand": bool(fill_by_hand),
        "E_F": EF, "E_F_prime": EFp, "E_F_doubleprime": fermi.E_F_doubleprime,
        "sign_flips": len(ledger.sign_flips),
        "dives": len(ledger.dives), "rises": len(ledger.rises),
        "energy_sign_Q": lit["Q"], "energy_sign_Qc": lit["Qc"], "energy_sign_Qd": lit["Qd"],
        "half_sum_Qc": lit["Qc_eq29_twice"] / 2,
        "half_sum_Qc_agrees": lit["Qc_eq29_twice"] == 2 * lit["Qc"],
    }
    return ChargeDecomposition(int(Q), int(Qc), int(Qd), method_tags=tags)


def untracked_charge(ledger: LevelLedger, fermi: FermiWindow) -> int:
    """The level count with the Fermi shift dropped (E'_F := E_F)."""
    pert = [p.E_perturbed for p in ledger.pairs]
    free = [p.E_free for p in ledger.pairs]
    return int(sum(fermi.E_F < e < 0 for e in pert) - sum(fermi.E_F < e < 0 for e in free))


# -- continuum limit ---------------------------------------------------------

def fermi_shift(eta_at_fermi: float, R: float) -> float:
    """Change of the Fermi momentum, -eta / R."""
    if not R > 0:
        raise ValueError("R must be positive")
    return -eta_at_fermi / R


@dataclass(frozen=True)
class AsymptoteEstimate:
    value: float
    drift: float
    n_points: int


def eta_minus_infinity(table: PhaseShiftTable, spec: PotentialSpec,
                       n_fit: int = 6, drift_tol: float = 1e-3) -> AsymptoteEstimate:
    """Extrapolate the total phase shift to E -> -infinity.

    The Born phase shift carries the leading large-|E| behaviour; the
    remainder is fitted by a quadratic in h = 1/|E| over the ``n_fit``
    largest |E| and evaluated at h = 0.  Repeating the fit without the
    largest point gives the drift; above ``drift_tol`` (relative) the table
    is declared too short.
    """
    neg = table.branch(-1)
    if neg.E.size < n_fit + 1:
        raise TruncationError(f"need at least {n_fit + 1} negative energies")
    order = np.argsort(np.abs(neg.E))[::-1]
    E = neg.E[order]
    eta = neg.eta_total[order]
    born = born_phase_shift(spec, E)
    born_inf = spec.integral_V()

    def fit(sel):
        h = 1.0 / np.abs(E[sel])
        coef = np.polyfit(h, eta[sel] - born[sel], 2)
        return coef[-1] + born_inf

    full = fit(slice(0, n_fit))
    part = fit(slice(1, n_fit + 1))
    drift = abs(full - part) / max(1.0, abs(full))
    if drift > drift_tol:
        raise TruncationError(
            f"eta(-inf) not stabilized: relative drift {drift:.2e} > {drift_tol:.0e}")
    return AsymptoteEstimate(float(full), float(drift), n_fit)


def default_energy_grid(spec: PotentialSpec, e_max: float | None = None,
                        n: int = 24) -> np.ndarray:
    """Logarithmic grid of +-E from just above the mass gap to ``e_max``.

    Both ends scale with the largest of the mass and the segment heights,
    so the asymptotic fit sees |E| well above every scale of the problem.
    """
    scale = max([1.0, spec.mass] + [abs(s.V) for s in spec.segments]
                + [abs(s.S) for s in spec.segments])
    e_min = max(2.0, 2.0 * spec.mass)
    if e_max is None:
        e_max = 1e3 * scale
    pos = np.geomspace(e_min, e_max, n)
    return np.concatenate([-pos[::-1], pos])


@dataclass(frozen=True)
class ContinuumCharge:
    phase_form: float
    integral_form: float

    @property
    def difference(self) -> float:
        return self.phase_form - self.integral_form


def continuum_Qc(table: PhaseShiftTable, spec: PotentialSpec) -> ContinuumCharge:
    """-(1/pi) eta(-inf) from the table, with -(1/pi) int V as the check."""
    est = eta_minus_infinity(table, spec)
    return ContinuumCharge(-est.value / math.pi, -spec.integral_V() / math.pi)


@dataclass(frozen=True)
class DiffuseProfile:
    x: np.ndarray
    density: np.ndarray
    tail_level: float  # eta(-inf) / (2 pi R)


def parity_density(spec: PotentialSpec, box: BoxGeometry, E: float, parity: str,
                   x: np.ndarray) -> np.ndarray:
    """|psi|^2 of the box-normalized parity solution at energy E (no wall condition).

    The solution is started at x = 0 with the parity fixing u or v there and
    normalized to unit probability on [-R, R].
    """
    L0 = sum(p.strength for p in spec.point_terms if p.x0 == 0.0)
    t0 = 0.5 * L0 if parity == "+" else 0.5 * (math.pi + L0)
    r = np.abs(np.asarray(x, dtype=float))
    grid = np.unique(np.concatenate([[0.0], r, np.linspace(0.0, box.R, 4001)]))
    vec = np.array([math.cos(t0), math.sin(t0)])
    amps = np.empty(grid.size)
    amps[0] = 1.0
    for i in range(1, grid.size):
        vec = segment_product(spec, E, grid[i - 1], grid[i]) @ vec
        amps[i] = vec @ vec
    norm = 2.0 * trapezoid(amps, grid)
    return np.interp(r, grid, amps / norm)


def continuum_Qd(table: PhaseShiftTable, spec: PotentialSpec, box: BoxGeometry,
                 E_F: float | None = None, x: np.ndarray | None = None):
    """Diffuse charge +(1/pi) eta(-inf) and its density profile.

    The profile is ``(1/pi) sum_l eta_l(E_F) |psi_l(E_F, x)|^2`` at the
    most negative tabulated energy (or ``E_F``); far from the potential it
    approaches the uniform level eta(-inf)/(2 pi R).
    """
    est = eta_minus_infinity(table, spec)
    Qd = est.value / math.pi
    neg = table.branch(-1)
    if E_F is None:
        i = int(np.argmin(neg.E))
    else:
        i = int(np.argmin(np.abs(neg.E - E_F)))
    EF = float(neg.E[i])
    if x is None:
        x = np.linspace(-box.R, box.R, 801)
    dens = np.zeros_like(np.asarray(x, dtype=float))
    if spec.is_even():
        for parity, eta_l in (("+", neg.eta_plus[i]), ("-", neg.eta_minus[i])):
            dens = dens + eta_l / math.pi * parity_density(spec, box, EF, parity, x)
    return Qd, DiffuseProfile(np.asarray(x), dens, est.value / (2 * math.pi * box.R))


# -- delta-model sweep ---------------------------------------------------------

def delta_charges(lam: float, mass: float, R: float, cutoffs=(-5.0,),
                  schedule: ContinuationSchedule | None = None,
                  fill_by_hand: bool = False, with_continuum: bool = True) -> list[dict]:
    """Integer and continuum charges of V = -2 lam delta(x) at several cutoffs."""
    box = BoxGeometry(R)
    spec = PotentialSpec.delta_model(box, lam, mass)
    reach = max(abs(c) for c in cutoffs) + 1.0
    ledger = match_levels(spec, box, (-reach, reach), schedule)
    if with_continuum:
        table = phase_shift_table(spec, box, default_energy_grid(spec))
        qc = continuum_Qc(table, spec).phase_form
        qd = -qc
    else:
        qc = qd = None
    rows = []
    for c in cutoffs:
        fw = fermi_window(ledger, c)
        dec = charge_split(ledger, fw, fill_by_hand)
        rows.append({"lam": lam, "E_F": fw.E_F, "Q_int": dec.Q_int, "Qc_int": dec.Qc_int,
                     "Qd_int": dec.Qd_int, "Qc_cont": qc, "Qd_cont": qd})
    return rows


__all__ = [
    "ContinuationSchedule", "ContinuationReport", "match_levels", "fermi_window",
    "total_charge", "charge_split", "untracked_charge", "fermi_shift",
    "eta_minus_infinity", "default_energy_grid", "continuum_Qc", "continuum_Qd",
    "ContinuumCharge", "DiffuseProfile", "parity_density", "delta_charges",
    "AsymptoteEstimate",
]
