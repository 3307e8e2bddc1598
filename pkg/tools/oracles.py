"""Independent reference values for the test suite.

Nothing here imports ``vacuumcharge``.  The Dirac problems are solved with
fresh propagators (mpmath matrix exponentials or analytic free solutions),
radial phase shifts come from spherical Bessel matching, and integer charges
from a fine-step continuation with per-sector nearest matching.  Run once
and commit the JSON:

    python tools/oracles.py > tests/data/oracle_values.json
"""

from __future__ import annotations

import json
import math
import sys

import mpmath as mp
import numpy as np
from scipy.special import spherical_jn, spherical_yn

mp.mp.dps = 40


# -- 1D Dirac, alpha = sigma_2, beta = sigma_3 ---------------------------------
# psi' = [[0, E - V + M], [M + V - E, 0]] psi,  M = m + S

def mp_propagator(E, width, m, S, V):
    A = mp.matrix([[0, E - V + m + S], [m + S + V - E, 0]])
    return mp.expm(A * width)


def mp_box_condition(E, R, m, pieces):
    """u + v at +R for the solution with u = v at -R.  pieces: (x0, x1, S, V)."""
    psi = mp.matrix([[1], [1]])
    for x0, x1, S, V in pieces:
        psi = mp_propagator(E, mp.mpf(x1) - mp.mpf(x0), m, S, V) * psi
    return psi[0] + psi[1]


def mp_box_levels(R, m, pieces, window, step):
    f = lambda e: float(mp_box_condition(mp.mpf(e), R, m, pieces))
    grid = np.arange(window[0], window[1] + step, step)
    vals = [f(e) for e in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            r = mp.findroot(lambda e: mp_box_condition(e, R, m, pieces), (mp.mpf(a), mp.mpf(b)),
                            solver="anderson")
            roots.append(float(r))
    return roots


def square_well_box():
    R, m = 1.0, 1.0
    pieces = [(-1.0, -0.5, 0.0, 0.0), (-0.5, 0.5, 0.5, -2.0), (0.5, 1.0, 0.0, 0.0)]
    levels = mp_box_levels(R, m, pieces, (-12.0, 12.0), 0.01)
    return {"R": R, "mass": m, "segments": [list(p) for p in pieces],
            "window": [-12.0, 12.0], "levels": levels}


def asymmetric_box():
    R, m = 1.5, 0.3
    pieces = [(-1.5, -0.4, 0.2, 0.7), (-0.4, 0.9, -0.1, -1.3), (0.9, 1.5, 0.0, 0.4)]
    levels = mp_box_levels(R, m, pieces, (-8.0, 8.0), 0.01)
    return {"R": R, "mass": m, "segments": [list(p) for p in pieces],
            "window": [-8.0, 8.0], "levels": levels}


# -- delta model: per-parity quantization on (0, R) -----------------------------

def free_prop(E, x, m):
    """exp(A x) for V = S = 0, vectorized over E (real part of analytic form)."""
    E = np.asarray(E, dtype=complex)
    q = np.sqrt(E * E - m * m)
    q = np.where(q == 0, 1e-300, q)
    c = np.cos(q * x)
    s = np.sin(q * x) / q
    a12 = (E + m) * s
    a21 = (m - E) * s
    return c.real, a12.real, a21.real


def sector_condition(E, lam, m, R, parity):
    """u + v at +R for the half-box solution of the given parity."""
    L = -2.0 * lam
    t = 0.5 * L if parity == "+" else 0.5 * (math.pi + L)
    u0, v0 = math.cos(t), math.sin(t)
    c, a12, a21 = free_prop(E, R, m)
    u = c * u0 + a12 * v0
    v = a21 * u0 + c * v0
    return u + v


def sector_levels(lam, m, R, parity, window, step=2e-3):
    grid = np.arange(window[0], window[1] + step, step)
    f = sector_condition(grid, lam, m, R, parity)
    idx = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    lo, hi = grid[idx], grid[idx + 1]
    flo = f[idx]
    for _ in range(60):  # vectorized bisection
        mid = 0.5 * (lo + hi)
        fm = sector_condition(mid, lam, m, R, parity)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def delta_integer_charges(lam, m, R, cutoffs, n_steps=240):
    reach = max(abs(c) for c in cutoffs)
    window = (-reach - 4.0, reach + 4.0)
    free = {p: sector_levels(0.0, m, R, p, window) for p in "+-"}
    allfree = np.sort(np.concatenate(list(free.values())))
    tracks = {p: free[p].copy() for p in "+-"}
    for g in np.linspace(0.0, 1.0, n_steps + 1)[1:]:
        for p in "+-":
            new = sector_levels(g * lam, m, R, p, window)
            prev = tracks[p]
            idx = np.searchsorted(new, prev)
            cand = []
            for e, i in zip(prev, idx):
                opts = [new[j] for j in (i - 1, i) if 0 <= j < new.size]
                cand.append(min(opts, key=lambda x: abs(x - e)))
            cand = np.array(cand)
            if np.unique(cand).size != cand.size:
                raise RuntimeError("continuation collision; refine n_steps")
            tracks[p] = cand
    rows = []
    for c in cutoffs:
        # snap to the free gap holding the cutoff
        i = np.searchsorted(allfree, c)
        EF = 0.5 * (allfree[i - 1] + allfree[i])
        Qc = Qd = 0
        for p in "+-":
            f, t = free[p], tracks[p]
            occ = f < 0
            n_free_above = int(np.sum((f > EF) & (f < 0)))
            n_img_above = int(np.sum(t[occ] > EF))
            Qc += n_img_above - n_free_above
            # occupied levels that crossed E_F: down counts -1, up +1 against Q_c
            down = int(np.sum((f[occ] > EF) & (t[occ] < EF)))
            up = int(np.sum((f[occ] < EF) & (t[occ] > EF)))
            Qd += down - up
        rows.append({"cutoff": c, "E_F": float(EF), "Qc_int": Qc, "Qd_int": Qd,
                     "Q": Qc + Qd})
    return rows


# -- radial Schroedinger phase shifts -------------------------------------------

def sw_tan_eta(l, k, K, a):
    jl = lambda z: spherical_jn(l, z)
    yl = lambda z: spherical_yn(l, z)
    jp = lambda z: spherical_jn(l, z, derivative=True)
    yp = lambda z: spherical_yn(l, z, derivative=True)
    num = k * jp(k * a) * jl(K * a) - K * jl(k * a) * jp(K * a)
    den = k * yp(k * a) * jl(K * a) - K * yl(k * a) * jp(K * a)
    return num / den


def square_well_eta_mod_pi(l, E, depth, a, mass=1.0):
    k = math.sqrt(2 * mass * E)
    K = math.sqrt(2 * mass * (E + depth))
    return float(math.atan(sw_tan_eta(l, k, K, a)))


def hard_sphere_friedel(a, k_F, l_max=40):
    """(2/pi) sum (2l+1) eta_l with eta_l continuous in k from eta_l(0) = 0."""
    ks = np.linspace(1e-4, k_F, 40001)
    total, etas = 0.0, []
    for l in range(l_max + 1):
        eta = np.unwrap(2 * np.arctan(spherical_jn(l, ks * a) / spherical_yn(l, ks * a))) / 2
        eta -= np.round(eta[0] / math.pi) * math.pi
        etas.append(float(eta[-1]))
        total += (2 * l + 1) * eta[-1]
    return {"a": a, "k_F": k_F, "eta": etas[:6], "Q_c": 2.0 / math.pi * total}


def main():
    out = {
        "square_well_box": square_well_box(),
        "asymmetric_box": asymmetric_box(),
        "delta_charges": {str(lam): delta_integer_charges(lam, 1.0, 20.0, [-5.0, -10.0, -20.0])
                          for lam in (0.2, 0.4, 0.8, 1.2)},
        "square_well_radial": [
            {"l": l, "E": E, "depth": 2.0, "radius": 1.0,
             "eta_mod_pi": square_well_eta_mod_pi(l, E, 2.0, 1.0)}
            for l in (0, 1, 2) for E in (0.3, 1.0, 2.5)],
        "hard_sphere": hard_sphere_friedel(1.0, 1.5),
    }
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
