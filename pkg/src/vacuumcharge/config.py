"""Run configuration: schema defaults, unit conversion and section parsers.

Configs are YAML or JSON mappings.  Common keys::

    R: 1.0                  # box half-width
    mass: 0.0
    segments: [[x_left, x_right, S, V], ...]
    point_terms: [[x0, strength], ...]
    model: {delta: {lam: 0.4, x0: 0.0}}   # shortcut instead of segments
    window: [-10, 10]
    cutoffs: [-5, -10]
    schedule: {steps: 8, max_halvings: 10, adaptive: true}
    tolerances: {...}

With ``units: mev-fm`` energies are in MeV and lengths in fm; lengths are
converted to MeV^-1 with :data:`HBARC` on the way in and back to fm on
the way out.  Natural-unit runs never touch the constant.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

from .charge import ContinuationSchedule
from .errors import SpecError
from .model import BoxGeometry, PotentialSpec, spec_from_config

HBARC = 197.3269804  # MeV fm

DEFAULT_TOLERANCES = {
    "rtol": 1e-12,
    "residual_tol": 1e-8,
    "drift_tol": 1e-3,
    "friedel_tol": 1e-6,
    "mass_tail_tol": 1e-3,
}


@dataclass(frozen=True)
class Units:
    name: str = "natural"

    def __post_init__(self):
        if self.name not in ("natural", "mev-fm"):
            raise SpecError(f"unknown units {self.name!r}")

    @property
    def length_factor(self) -> float:
        """Multiply an input length by this to get solver units."""
        return 1.0 / HBARC if self.name == "mev-fm" else 1.0

    def length_in(self, x: float) -> float:
        return float(x) * self.length_factor

    def length_out(self, x):
        return x / self.length_factor

    @property
    def length_label(self) -> str:
        return "fm" if self.name == "mev-fm" else "natural"


def tolerances(cfg: dict) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    extra = cfg.get("tolerances") or {}
    unknown = set(extra) - set(tol)
    if unknown:
        raise SpecError(f"unknown tolerance keys {sorted(unknown)}")
    tol.update({k: float(v) for k, v in extra.items()})
    return tol


def _convert_lengths(cfg: dict, units: Units) -> dict:
    out = copy.deepcopy(cfg)
    f = units.length_in
    if "R" in out:
        out["R"] = f(out["R"])
    if out.get("segments"):
        out["segments"] = [[f(a), f(b), S, V] for a, b, S, V in out["segments"]]
    if out.get("point_terms"):
        out["point_terms"] = [[f(x0), s] for x0, s in out["point_terms"]]
    return out


def potential(cfg: dict, units: Units) -> tuple[PotentialSpec, BoxGeometry]:
    """Build the 1D potential from explicit segments or a ``model`` shortcut."""
    model = cfg.get("model")
    if model:
        if "R" not in cfg:
            raise SpecError("config needs the box half-width 'R'")
        box = BoxGeometry(units.length_in(cfg["R"]))
        mass = float(cfg.get("mass", 0.0))
        if "delta" in model:
            d = model["delta"]
            return PotentialSpec.delta_model(box, float(d["lam"]), mass,
                                             units.length_in(d.get("x0", 0.0))), box
        if "square_well" in model:
            w = model["square_well"]
            return PotentialSpec.square_well(box, units.length_in(w["half_width"]),
                                             float(w.get("V", 0.0)), float(w.get("S", 0.0)),
                                             mass), box
        if "constant" in model:
            c = model["constant"]
            return PotentialSpec.constant(box, float(c.get("V", 0.0)), float(c.get("S", 0.0)),
                                          mass), box
        raise SpecError(f"unknown model shortcut {sorted(model)}")
    return spec_from_config(_convert_lengths(cfg, units))


def schedule(cfg: dict) -> ContinuationSchedule:
    s = cfg.get("schedule") or {}
    return ContinuationSchedule(int(s.get("steps", 8)), int(s.get("max_halvings", 10)),
                                bool(s.get("adaptive", True)))


def window(cfg: dict, spec: PotentialSpec, box: BoxGeometry) -> tuple[float, float]:
    if "window" in cfg:
        lo, hi = map(float, cfg["window"])
    else:
        # twenty free levels either side of the gap
        half = spec.mass + 20 * math.pi / (2 * box.R)
        lo, hi = -half, half
    if not hi > lo:
        raise SpecError("window must satisfy lo < hi")
    return lo, hi


def sweep_values(sec: dict) -> list[float]:
    v = sec.get("values")
    if isinstance(v, dict):
        import numpy as np
        return [float(x) for x in np.linspace(float(v["start"]), float(v["stop"]),
                                              int(v["num"]))]
    if not v:
        raise SpecError("sweep needs 'values' (list or {start, stop, num})")
    return [float(x) for x in v]
