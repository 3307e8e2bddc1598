"""Box geometry, potentials and the value types shared by the solvers.

Natural units throughout (hbar = c = 1).  A potential lives on the box
[-R, R] as a list of piecewise-constant segments carrying a Lorentz scalar
S and a vector V, plus point terms ``strength * delta(x - x0)`` of vector
type.  Point terms are kept as exact jump conditions; they are never
sampled as narrow wells here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from .errors import SpecError

_JOIN_TOL = 1e-12


@dataclass(frozen=True)
class BoxGeometry:
    R: float

    def __post_init__(self):
        if not (math.isfinite(self.R) and self.R > 0):
            raise SpecError(f"box half-width must be positive and finite, got {self.R!r}")

    @property
    def length(self) -> float:
        return 2.0 * self.R


@dataclass(frozen=True)
class Segment:
    x_left: float
    x_right: float
    S: float = 0.0
    V: float = 0.0

    @property
    def width(self) -> float:
        return self.x_right - self.x_left


@dataclass(frozen=True)
class PointTerm:
    x0: float
    strength: float


@dataclass(frozen=True)
class PotentialSpec:
    """Piecewise-constant S(x), V(x) on [-R, R] plus vector point terms.

    ``point_terms`` entries ``(x0, L)`` stand for ``L * delta(x - x0)`` added
    to V.  The delta model ``V = -2 lam delta(x)`` is ``PointTerm(0, -2 lam)``.
    """

    segments: tuple[Segment, ...]
    point_terms: tuple[PointTerm, ...] = ()
    mass: float = 0.0

    # -- constructors -----------------------------------------------------
    @classmethod
    def free(cls, box: BoxGeometry, mass: float = 0.0) -> "PotentialSpec":
        return cls((Segment(-box.R, box.R, 0.0, 0.0),), (), mass)

    @classmethod
    def constant(cls, box: BoxGeometry, V: float = 0.0, S: float = 0.0,
                 mass: float = 0.0) -> "PotentialSpec":
        return cls((Segment(-box.R, box.R, S, V),), (), mass)

    @classmethod
    def delta_model(cls, box: BoxGeometry, lam: float, mass: float = 0.0,
                    x0: float = 0.0) -> "PotentialSpec":
        return cls((Segment(-box.R, box.R),), (PointTerm(x0, -2.0 * lam),), mass)

    @classmethod
    def square_well(cls, box: BoxGeometry, half_width: float, V: float = 0.0,
                    S: float = 0.0, mass: float = 0.0) -> "PotentialSpec":
        """Even well of height V (and scalar S) on |x| < half_width."""
        a, R = half_width, box.R
        if not 0 < a < R:
            raise SpecError("square well must fit strictly inside the box")
        return cls((Segment(-R, -a), Segment(-a, a, S, V), Segment(a, R)), (), mass)

    @classmethod
    def from_arrays(cls, segments: Iterable[Sequence[float]],
                    point_terms: Iterable[Sequence[float]] = (),
                    mass: float = 0.0) -> "PotentialSpec":
        segs = tuple(Segment(*map(float, s)) for s in segments)
        pts = tuple(PointTerm(float(x), float(L)) for x, L in point_terms)
        return cls(segs, pts, float(mass))

    # -- derived quantities -----------------------------------------------
    def integral_V(self) -> float:
        """Integral of V over the box, point terms included."""
        return (math.fsum(s.V * s.width for s in self.segments)
                + math.fsum(p.strength for p in self.point_terms))

    def integral_S(self) -> float:
        return math.fsum(s.S * s.width for s in self.segments)

    def support(self) -> float:
        """Largest |x| at which S or V is nonzero (0 for the free spec)."""
        r = 0.0
        for s in self.segments:
            if s.S != 0.0 or s.V != 0.0:
                r = max(r, abs(s.x_left), abs(s.x_right))
        for p in self.point_terms:
            if p.strength != 0.0:
                r = max(r, abs(p.x0))
        return r

    def is_free(self) -> bool:
        return (all(s.S == 0.0 and s.V == 0.0 for s in self.segments)
                and all(p.strength == 0.0 for p in self.point_terms))

    def scaled(self, g: float) -> "PotentialSpec":
        """The perturbation U = beta S + V multiplied by the coupling g."""
        segs = tuple(replace(s, S=g * s.S, V=g * s.V) for s in self.segments)
        pts = tuple(replace(p, strength=g * p.strength) for p in self.point_terms)
        return PotentialSpec(segs, pts, self.mass)

    def without_potential(self) -> "PotentialSpec":
        R = self.segments[-1].x_right
        return PotentialSpec((Segment(-R, R),), (), self.mass)

    def is_even(self, tol: float = 1e-12) -> bool:
        """True when S and V are even functions of x (parity is conserved)."""
        R = self.segments[-1].x_right
        edges = sorted({round(e, 12) for s in self.segments for e in (s.x_left, s.x_right)})
        for e in edges:
            if not any(abs(e + f) <= tol * max(1.0, R) for f in edges):
                return False
        mids = [0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])]
        for xm in mids:
            s1, s2 = self.segment_at(xm), self.segment_at(-xm)
            if abs(s1.S - s2.S) > tol or abs(s1.V - s2.V) > tol:
                return False
        pts = {}
        for p in self.point_terms:
            pts[round(p.x0, 12)] = pts.get(round(p.x0, 12), 0.0) + p.strength
        for x0, L in pts.items():
            if abs(L - pts.get(round(-x0, 12) + 0.0, math.nan)) > tol:
                return False
        return True

    def segment_at(self, x: float) -> Segment:
        for s in self.segments:
            if s.x_left <= x <= s.x_right:
                return s
        raise SpecError(f"x = {x} outside the box")

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "mass": self.mass,
            "segments": [[s.x_left, s.x_right, s.S, s.V] for s in self.segments],
            "point_terms": [[p.x0, p.strength] for p in self.point_terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        return cls.from_arrays(d["segments"], d.get("point_terms", ()), d.get("mass", 0.0))


def validate_potential(spec: PotentialSpec, box: BoxGeometry) -> PotentialSpec:
    """Check a spec against the box; return it with equal neighbours merged.

    Raises :class:`SpecError` on gaps, overlaps, point terms on or outside
    the wall, or non-finite values.
    """
    R = box.R
    tol = _JOIN_TOL * max(1.0, R)
    if not math.isfinite(spec.mass) or spec.mass < 0:
        raise SpecError(f"mass must be finite and >= 0, got {spec.mass!r}")
    if not spec.segments:
        raise SpecError("at least one segment is required")
    for s in spec.segments:
        vals = (s.x_left, s.x_right, s.S, s.V)
        if not all(math.isfinite(v) for v in vals):
            raise SpecError(f"non-finite value in segment {vals}")
        if not s.x_right > s.x_left:
            raise SpecError(f"segment endpoints not increasing: {vals}")
    if abs(spec.segments[0].x_left + R) > tol or abs(spec.segments[-1].x_right - R) > tol:
        raise SpecError(f"segments must cover exactly [-{R}, {R}]")
    for a, b in zip(spec.segments[:-1], spec.segments[1:]):
        if b.x_left > a.x_right + tol:
            raise SpecError(f"gap between x = {a.x_right} and x = {b.x_left}")
        if b.x_left < a.x_right - tol:
            raise SpecError(f"overlap between x = {b.x_left} and x = {a.x_right}")
    for p in spec.point_terms:
        if not (math.isfinite(p.x0) and math.isfinite(p.strength)):
            raise SpecError(f"non-finite point term {p}")
        if not -R < p.x0 < R:
            raise SpecError(f"point term at x0 = {p.x0} must lie strictly inside (-R, R)")

    # snap joins exactly and merge equal neighbours
    merged: list[Segment] = []
    for s in spec.segments:
        x_left = -R if not merged else merged[-1].x_right
        s = Segment(x_left, s.x_right, s.S, s.V)
        if merged and merged[-1].S == s.S and merged[-1].V == s.V:
            merged[-1] = Segment(merged[-1].x_left, s.x_right, s.S, s.V)
        else:
            merged.append(s)
    merged[-1] = replace(merged[-1], x_right=R)
    pts = tuple(sorted((p for p in spec.point_terms if p.strength != 0.0), key=lambda p: p.x0))
    return PotentialSpec(tuple(merged), pts, float(spec.mass))


# -- spectra and ledgers ----------------------------------------------------

PARITIES = ("+", "-", "none")


@dataclass(frozen=True)
class Level:
    E: float
    parity: str = "none"
    residual: float = 0.0
    label: int = 0  # node label, invariant under continuous deformation


@dataclass(frozen=True)
class Spectrum:
    levels: tuple[Level, ...]
    window: tuple[float, float]

    def __post_init__(self):
        Es = [lv.E for lv in self.levels]
        if any(b <= a for a, b in zip(Es[:-1], Es[1:])):
            raise ValueError("levels must be strictly increasing")
        for lv in self.levels:
            if lv.parity not in PARITIES:
                raise ValueError(f"bad parity label {lv.parity!r}")

    @property
    def energies(self):
        import numpy as np
        return np.array([lv.E for lv in self.levels])

    def __len__(self):
        return len(self.levels)

    def sector(self, parity: str) -> "Spectrum":
        return Spectrum(tuple(lv for lv in self.levels if lv.parity == parity), self.window)


@dataclass(frozen=True)
class LevelPair:
    E_free: float
    E_perturbed: float
    sector: str
    path_id: int


@dataclass(frozen=True)
class LevelLedger:
    pairs: tuple[LevelPair, ...]
    window: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        by_sector: dict[str, list[LevelPair]] = {}
        for p in self.pairs:
            by_sector.setdefault(p.sector, []).append(p)
        for sec, ps in by_sector.items():
            ps = sorted(ps, key=lambda p: p.E_free)
            fr = [p.E_free for p in ps]
            pe = [p.E_perturbed for p in ps]
            if len(set(fr)) != len(fr) or len(set(pe)) != len(pe):
                raise ValueError(f"ledger is not a bijection in sector {sec!r}")
            if any(b <= a for a, b in zip(pe[:-1], pe[1:])):
                raise ValueError(f"level ordering not preserved in sector {sec!r}")

    @property
    def sign_flips(self) -> tuple[LevelPair, ...]:
        return tuple(p for p in self.pairs
                     if (p.E_free > 0) != (p.E_perturbed > 0))

    @property
    def dives(self) -> tuple[LevelPair, ...]:
        return tuple(p for p in self.pairs if p.E_free > 0 > p.E_perturbed)

    @property
    def rises(self) -> tuple[LevelPair, ...]:
        return tuple(p for p in self.pairs if p.E_free < 0 < p.E_perturbed)

    def image(self, E_free: float) -> float:
        for p in self.pairs:
            if p.E_free == E_free:
                return p.E_perturbed
        raise KeyError(E_free)

    def sorted_pairs(self) -> list[LevelPair]:
        return sorted(self.pairs, key=lambda p: p.E_free)


@dataclass(frozen=True)
class FermiWindow:
    """Free cutoff E_F < 0 and its tracked images E'_F and E''_F."""

    E_F: float
    E_F_prime: float
    E_F_doubleprime: float

    def __post_init__(self):
        if not self.E_F < 0:
            raise ValueError("the free Fermi energy of the vacuum must be negative")
        if not self.E_F_doubleprime > 0:
            raise ValueError("E''_F (image of |E_F|) must be positive")


@dataclass(frozen=True)
class ChargeDecomposition:
    Q_int: int
    Qc_int: int
    Qd_int: int
    Qc_cont: float | None = None
    Qd_cont: float | None = None
    Q_reg: float | None = None
    method_tags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.Q_int != self.Qc_int + self.Qd_int:
            raise ValueError(
                f"Q = {self.Q_int} differs from Q_c + Q_d = {self.Qc_int} + {self.Qd_int}")

    def to_dict(self) -> dict:
        return {
            "Q_int": self.Q_int, "Qc_int": self.Qc_int, "Qd_int": self.Qd_int,
            "Qc_cont": self.Qc_cont, "Qd_cont": self.Qd_cont, "Q_reg": self.Q_reg,
            "method_tags": dict(self.method_tags),
        }


# -- config files -----------------------------------------------------------

def load_config(path: str | Path) -> dict:
    """Read a YAML (or JSON) config file into a plain dict."""
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise SpecError(f"{path}: config must be a mapping")
    return data


def spec_from_config(cfg: dict) -> tuple[PotentialSpec, BoxGeometry]:
    """Build ``(spec, box)`` from the ``R``/``mass``/``segments``/``point_terms`` keys.

    When ``segments`` is omitted the box is potential-free.
    """
    if "R" not in cfg:
        raise SpecError("config needs the box half-width 'R'")
    box = BoxGeometry(float(cfg["R"]))
    segs = cfg.get("segments") or [[-box.R, box.R, 0.0, 0.0]]
    for s in segs:
        if len(s) != 4:
            raise SpecError(f"segment {s!r} must have four numbers [x_left, x_right, S, V]")
    for p in cfg.get("point_terms") or []:
        if len(p) != 2:
            raise SpecError(f"point term {p!r} must be a pair [x0, strength]")
    spec = PotentialSpec.from_arrays(segs, cfg.get("point_terms") or [], cfg.get("mass", 0.0))
    return validate_potential(spec, box), box


def save_spec(spec: PotentialSpec, box: BoxGeometry, path: str | Path) -> None:
    data = {"R": box.R, **spec.to_dict()}
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(data, indent=2))
    else:
        path.write_text(yaml.safe_dump(data, sort_keys=False))


def load_spec(path: str | Path) -> tuple[PotentialSpec, BoxGeometry]:
    return spec_from_config(load_config(path))
