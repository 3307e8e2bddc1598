"""Command-line front end.

Every subcommand reads one config, writes ``manifest.json`` first, then its
CSV/JSON tables into ``--out``.  Module errors are reported as JSON
``{"error": {"code", "message", "type"}}`` on stderr (and in ``error.json``)
with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import config as C
from . import io
from .bag import (KINDS, ChiralProfile, RegularizationMethod, chiral_spectrum, chiral_to_mit,
                  crossing_estimate, free_bag_level, mass_independence_check,
                  perturbed_bag_spectrum, regularization_report, split_point_integral,
                  uniform_shift)
from .charge import (charge_split, continuum_Qd, default_energy_grid, eta_minus_infinity,
                     fermi_window, match_levels, untracked_charge)
from .dirac import born_asymptotes, phase_shift_table, solve_spectrum
from .errors import VacuumChargeError, ZeroModeError
from .friedel import (RadialPotential, build_channels, diffuse_charge, friedel_sum,
                      gas_charges, radial_phase_shift)
from .model import BoxGeometry, PotentialSpec, load_config

COMMANDS = ("spectrum", "charge", "bag", "chiral", "friedel", "sweep", "regularize")
EXIT_ERROR = 2


class RunContext:
    """Output directory, units and the list of written artifacts."""

    def __init__(self, out: Path, units: C.Units, figures: bool, threads: int):
        self.out = out
        self.units = units
        self.figures = figures
        self.threads = max(1, int(threads))
        self.outputs: list[str] = []

    def csv(self, name, header, rows):
        io.write_csv(self.out / name, header, rows)
        self.outputs.append(name)

    def json(self, name, payload):
        io.write_json(self.out / name, payload)
        self.outputs.append(name)

    def figure(self, name, fn, *args, **kw):
        if self.figures:
            fn(self.out / name, *args, **kw)
            self.outputs.append(name)


def _plots():
    from . import plots
    return plots


# -- spectrum ------------------------------------------------------------------

def cmd_spectrum(cfg: dict, ctx: RunContext, tol: dict) -> dict:
    spec, box = C.potential(cfg, ctx.units)
    win = C.window(cfg, spec, box)
    sp = solve_spectrum(spec, box, win, rtol=tol["rtol"], residual_tol=tol["residual_tol"])
    ctx.csv("levels.csv", ["index", "label", "E", "parity", "residual"],
            [(i, lv.label, lv.E, lv.parity, lv.residual) for i, lv in enumerate(sp.levels)])
    summary = {"n_levels": len(sp.levels), "window": list(win)}
    if cfg.get("phase_shifts") and spec.is_even() and not spec.is_free():
        table = phase_shift_table(spec, box, default_energy_grid(spec))
        ctx.csv("phase_shifts.csv", ["E", "eta_plus", "eta_minus", "eta_total"], table.entries)
        summary["phase_shift_points"] = int(table.E.size)
    if ctx.figures:
        free = solve_spectrum(spec.without_potential(), box, win)
        ctx.figure("levels.png", _plots().levels_figure, free.energies, sp.energies)
    return summary


# -- charge --------------------------------------------------------------------

def _continuum(spec, box, tol, ctx):
    table = phase_shift_table(spec, box, default_energy_grid(spec))
    est = eta_minus_infinity(table, spec, drift_tol=tol["drift_tol"])
    Qc_phase = -est.value / math.pi
    Qd, prof = continuum_Qd(table, spec, box)
    ctx.csv("phase_shifts.csv", ["E", "eta_plus", "eta_minus", "eta_total"], table.entries)
    x_out = ctx.units.length_out(prof.x)
    ctx.csv("diffuse_profile.csv", ["x", "rho_d"], zip(x_out, prof.density))
    ctx.figure("diffuse_profile.png", _plots().profile_figure, x_out, prof.density,
               f"x [{ctx.units.length_label}]", "rho_d", prof.tail_level)
    born_plus, born_minus = born_asymptotes(spec)
    return {
        "eta_minus_infinity": est.value,
        "eta_drift": est.drift,
        "Qc_phase_form": Qc_phase,
        "Qc_integral_form": -spec.integral_V() / math.pi,
        "Qc_form_difference": Qc_phase + spec.integral_V() / math.pi,
        "Qd": Qd,
        "Qc_plus_Qd": Qc_phase + Qd,
        "diffuse_tail_level": prof.tail_level,
        "born_eta_plus_infinity": born_plus,
        "born_eta_minus_infinity": born_minus,
    }


def cmd_charge(cfg: dict, ctx: RunContext, tol: dict) -> dict:
    spec, box = C.potential(cfg, ctx.units)
    report: dict = {"integral_V": spec.integral_V(), "integral_S": spec.integral_S()}
    cutoffs = [float(c) for c in cfg.get("cutoffs") or []]
    fill = bool(cfg.get("fill_by_hand", False))
    if cfg.get("discrete", True) and cutoffs:
        reach = max(abs(c) for c in cutoffs) + 1.0
        lo, hi = C.window(cfg, spec, box) if "window" in cfg else (-reach, reach)
        ledger = match_levels(spec, box, (lo, hi), C.schedule(cfg))
        ctx.csv("ledger.csv", ["path_id", "sector", "E_free", "E_perturbed", "sign_flip"],
                [(p.path_id, p.sector, p.E_free, p.E_perturbed,
                  (p.E_free > 0) != (p.E_perturbed > 0)) for p in ledger.sorted_pairs()])
        rows = []
        for c in cutoffs:
            fw = fermi_window(ledger, c)
            dec = charge_split(ledger, fw, fill)
            t = dec.method_tags
            rows.append((c, fw.E_F, fw.E_F_prime, dec.Q_int, dec.Qc_int, dec.Qd_int,
                         untracked_charge(ledger, fw), t["sign_flips"], t["half_sum_Qc"],
                         t["half_sum_Qc_agrees"]))
        ctx.csv("charges.csv", ["cutoff", "E_F", "E_F_prime", "Q", "Qc_int", "Qd_int",
                                "Q_untracked", "sign_flips", "half_sum_Qc",
                                "half_sum_Qc_agrees"], rows)
        report["discrete"] = {"n_pairs": len(ledger.pairs), "window": [lo, hi],
                              "all_Q_zero": all(r[3] == 0 for r in rows) or fill}
    if cfg.get("continuum", True):
        if not spec.is_even():
            raise VacuumChargeError("continuum charges need an even potential")
        report["continuum"] = _continuum(spec, box, tol, ctx)
    ctx.json("charge_report.json", report)
    return report


# -- bag -----------------------------------------------------------------------

def cmd_bag(cfg: dict, ctx: RunContext, tol: dict) -> dict:
    spec, box = C.potential(cfg, ctx.units)
    n_levels = int(cfg.get("n_levels", 50))
    ns = np.concatenate([np.arange(-n_levels + 1, 1), np.arange(1, n_levels + 1)])
    closed = perturbed_bag_spectrum(spec, box, ns)
    dE = uniform_shift(spec, box)
    a = math.pi / (4 * box.R)
    win = (free_bag_level(-n_levels + 1, box) + dE - a, free_bag_level(n_levels, box) + dE + a)
    numeric = {lv.label: lv.E for lv in solve_spectrum(spec, box, win, rtol=tol["rtol"]).levels}
    rows, worst = [], 0.0
    for lv in closed.levels:
        En = numeric.get(lv.label, math.nan)
        dev = abs(En - lv.E)
        worst = max(worst, dev) if math.isfinite(dev) else math.inf
        rows.append((lv.label, float(free_bag_level(lv.label, box)), lv.E, En, dev))
    ctx.csv("bag_levels.csv", ["n", "E_free", "E_closed_form", "E_numeric", "deviation"], rows)
    cross = crossing_estimate(spec, box)
    report = {"uniform_shift": dE, "max_deviation": worst,
              "crossing": {"smooth_estimate": cross.estimate, "dives": cross.dives,
                           "rises": cross.rises, "signed_count": cross.signed_count},
              "regularized": {k: regularization_report(spec, box, RegularizationMethod(k))
                              .to_dict() for k in KINDS}}
    ctx.json("bag_report.json", report)
    ctx.figure("bag_levels.png", _plots().levels_figure, [r[1] for r in rows],
               [r[2] for r in rows], "bag levels")
    return report


def cmd_regularize(cfg: dict, ctx: RunContext, tol: dict) -> dict:
    spec, box = C.potential(cfg, ctx.units)
    sec = cfg.get("regularize") or {}
    s_seq = tuple(float(s) for s in sec.get("s_sequence", (0.4, 0.2, 0.1, 0.05, 0.025)))
    rows = []
    for k in KINDS:
        rep = regularization_report(spec, box, RegularizationMethod(k, s_seq))
        rows.append((k, rep.analytic, rep.extrapolated, rep.discrepancy))
    dE = uniform_shift(spec, box)
    integ = split_point_integral(dE, box)
    rows.append(("split-point-integral", rows[0][1], integ.value, integ.value - rows[0][1]))
    ctx.csv("regularization.csv", ["method", "analytic", "numeric", "difference"], rows)
    report = {"reference_minus_intV_over_pi": -spec.integral_V() / math.pi,
              "methods": {r[0]: {"analytic": r[1], "numeric": r[2]} for r in rows}}
    masses = [float(m) for m in sec.get("masses", [])]
    if masses:
        mrows = []
        for m in masses:
            mi = mass_independence_check(spec, box, m, tail_tol=tol["mass_tail_tol"])
            mrows.append((m, mi.difference, mi.tail_correction, mi.window[0], mi.window[1]))
        ctx.csv("mass_independence.csv", ["mass", "Q_reg_difference", "tail_estimate",
                                          "window_lo", "window_hi"], mrows)
        report["mass_independence"] = {str(r[0]): r[1] for r in mrows}
    ctx.json("regularization_report.json", report)
    return report


# -- chiral --------------------------------------------------------------------

def cmd_chiral(cfg: dict, ctx: RunContext, tol: dict) -> dict:
    sec = cfg.get("chiral")
    if not sec:
        raise VacuumChargeError("config needs a 'chiral' section with x and theta nodes")
    prof = ChiralProfile(tuple(ctx.units.length_in(x) for x in sec["x"]),
                         tuple(float(t) for t in sec["theta"]))
    spec, box = chiral_to_mit(prof)
    win = tuple(map(float, cfg.get("window", (-20.0 / box.R, 20.0 / box.R))))
    ch = chiral_spectrum(prof, win)
    mit = solve_spectrum(spec, box, win).energies
    if ch.size != mit.size:
        raise VacuumChargeError(f"level counts differ: chiral {ch.size}, MIT {mit.size}")
    diff = np.abs(ch - mit)
    ctx.csv("chiral_levels.csv", ["index", "E_chiral", "E_mit", "difference"],
            [(i, a, b, d) for i, (a, b, d) in enumerate(zip(ch, mit, diff))])
    report = {"n_levels": int(ch.size), "max_difference": float(diff.max(initial=0.0)),
              "mit_segments": [[ctx.units.length_out(s.x_left), ctx.units.length_out(s.x_right),
                                s.V] for s in spec.segments]}
    ctx.json("chiral_report.json", report)
    return report


# -- friedel -------------------------------------------------------------------

def _radial(sec: dict, units: C.Units) -> RadialPotential:
    if "square_well" in sec:
        w = sec["square_well"]
        return RadialPotential.square_well(float(w["depth"]), units.length_in(w["radius"]))
    if "hard_sphere" in sec:
        return RadialPotential.hard_sphere(units.length_in(sec["hard_sphere"]["radius"]))
    raise VacuumChargeError("friedel section needs 'square_well' or 'hard_sphere'")


def cmd_friedel(cfg: dict, ctx: RunContext, tol: dict) -> dict:
    sec = cfg.get("friedel")
    if not sec:
        raise VacuumChargeError("config needs a 'friedel' section")
    pot = _radial(sec, ctx.units)
    R = ctx.units.length_in(sec["R"])
    E_F = float(sec["E_F"])
    mass = float(sec.get("mass", 1.0))
    chans = build_channels(pot, E_F, mass, tol=tol["friedel_tol"], R=R)
    fs = friedel_sum(chans, E_F, tol=tol["friedel_tol"], Z=sec.get("Z"))
    Qd, prof = diffuse_charge(chans, E_F, R, mass)
    ctx.csv("channels.csv", ["l", "weight", "eta"], [(c.l, c.weight, c.eta) for c in chans])
    r_out = ctx.units.length_out(prof.r)
    ctx.csv("diffuse_profile.csv", ["r", "radial_density"], zip(r_out, prof.radial_density))
    report = {"Q_c": fs.Q_c, "Q_d": Qd, "sum": fs.Q_c + Qd,
              "truncation_bound": fs.truncation_bound, "residual_Z": fs.residual_Z,
              "n_channels": len(chans), "diffuse_mean_level": prof.mean_level}
    if sec.get("discrete", True):
        l_values = [int(l) for l in sec.get("l_values", [c.l for c in chans])]
        g = gas_charges(pot, R, E_F, l_values, mass)
        ctx.csv("gas_channels.csv", ["l", "weight", "N", "E_F_prime", "Q", "Q_c", "Q_d"],
                [(r["l"], r["weight"], r["N"], r["E_F_prime"], r["Q"], r["Q_c"], r["Q_d"])
                 for r in g.per_channel])
        report["discrete"] = {"Q": g.Q, "Q_c": g.Q_c, "Q_d": g.Q_d}
    ctx.json("friedel_report.json", report)
    ctx.figure("diffuse_profile.png", _plots().profile_figure, r_out, prof.radial_density,
               f"r [{ctx.units.length_label}]", "4 pi r^2 rho_d", prof.mean_level)
    return report


# -- sweep ---------------------------------------------------------------------

def _delta_point(args):
    lam, mass, R, cutoff, steps = args
    from .charge import ContinuationSchedule
    box = BoxGeometry(R)
    spec = PotentialSpec.delta_model(box, lam, mass)
    try:
        ledger = match_levels(spec, box, (-abs(cutoff) - 1.0, abs(cutoff) + 1.0),
                              ContinuationSchedule(steps))
        dec = charge_split(ledger, fermi_window(ledger, cutoff))
    except ZeroModeError:
        return (lam, None, None, None, 2 * lam / math.pi, "zero_mode")
    return (lam, dec.Q_int, dec.Qc_int, dec.Qd_int, 2 * lam / math.pi, "ok")


def _well_point(args):
    depth, radius, R, E_F, l_values, mass = args
    pot = RadialPotential.square_well(depth, radius)
    g = gas_charges(pot, R, E_F, l_values, mass)
    eta = [float(radial_phase_shift(pot, E_F, l, mass, R)) for l in l_values]
    smooth = 2.0 / math.pi * math.fsum((2 * l + 1) * e for l, e in zip(l_values, eta))
    return (depth, g.Q, g.Q_c, g.Q_d, smooth, "ok")


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def cmd_sweep(cfg: dict, ctx: RunContext, tol: dict) -> dict:
    sec = cfg.get("sweep")
    if not sec:
        raise VacuumChargeError("config needs a 'sweep' section")
    values = C.sweep_values(sec)
    kind = sec.get("kind", "delta")
    if kind == "delta":
        R = ctx.units.length_in(cfg.get("R", 20.0))
        items = [(v, float(cfg.get("mass", 1.0)), R, float(sec.get("cutoff", -5.0)),
                  int((cfg.get("schedule") or {}).get("steps", 8))) for v in values]
        rows = _map(_delta_point, items, ctx.threads)
        name = "lam"
    elif kind == "well":
        R = ctx.units.length_in(sec["R"])
        items = [(v, ctx.units.length_in(sec["radius"]), R, float(sec["E_F"]),
                  [int(l) for l in sec.get("l_values", [0])], float(sec.get("mass", 1.0)))
                 for v in values]
        rows = _map(_well_point, items, ctx.threads)
        name = "depth"
    else:
        raise VacuumChargeError(f"unknown sweep kind {kind!r}")
    ctx.csv("sweep.csv", [name, "Q", "Qc_int", "Qd_int", "Qc_continuum", "status"], rows)
    ok = [r for r in rows if r[5] == "ok"]
    ctx.figure("sweep.png", _plots().staircase_figure, [r[0] for r in ok], [r[2] for r in ok],
               [r[4] for r in ok], name)
    return {"points": len(rows), "rejected": len(rows) - len(ok)}


HANDLERS = {"spectrum": cmd_spectrum, "charge": cmd_charge, "bag": cmd_bag,
            "chiral": cmd_chiral, "friedel": cmd_friedel, "sweep": cmd_sweep,
            "regularize": cmd_regularize}


# -- driver --------------------------------------------------------------------

def run(command: str, cfg: dict, out: Path, units: str = "natural", threads: int = 1,
        figures: bool = False) -> dict:
    """Run one subcommand on an already-loaded config; returns its summary."""
    if command not in HANDLERS:
        raise VacuumChargeError(f"unknown command {command!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    u = C.Units(cfg.get("units", units))
    tol = C.tolerances(cfg)
    started = time.perf_counter()
    io.write_manifest(out, command, cfg, u.name, tol, [])
    ctx = RunContext(out, u, figures, threads)
    try:
        summary = HANDLERS[command](cfg, ctx, tol)
    except BaseException:
        io.finish_manifest(out, "failed", ctx.outputs, started)
        raise
    ctx.json("summary.json", {"command": command, "summary": summary})
    io.finish_manifest(out, "ok", ctx.outputs, started)
    return summary


def _error_payload(exc: BaseException) -> dict:
    code = getattr(exc, "code", None) or ("invalid_config" if isinstance(
        exc, (ValueError, KeyError, TypeError, yaml.YAMLError)) else "internal")
    if isinstance(exc, FileNotFoundError):
        code = "file_not_found"
    return {"error": {"code": code, "type": type(exc).__name__, "message": str(exc)}}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vacuumcharge",
                                description="Vacuum charge of Dirac and Fermi-gas models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {io.tool_version()}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML or JSON config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--units", choices=("natural", "mev-fm"), default="natural")
        sp.add_argument("--figures", action="store_true",
                        help="also render PNG figures with matplotlib")
    rp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.add_argument("--out", required=True)
    rp.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.command == "replay":
            man = io.load_manifest(args.manifest)
            cfg = dict(man["config"])
            cfg.setdefault("units", man.get("units", "natural"))
            run(man["command"], cfg, out, cfg["units"], args.threads)
        else:
            cfg = load_config(args.config)
            cfg.setdefault("units", args.units)
            run(args.command, cfg, out, cfg["units"], args.threads, args.figures)
    except Exception as exc:  # every failure becomes machine-readable
        payload = _error_payload(exc)
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        try:
            out.mkdir(parents=True, exist_ok=True)
            io.write_json(out / "error.json", payload)
        except OSError:
            pass
        return EXIT_ERROR
    print(json.dumps({"status": "ok", "out": str(out)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
