import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from vacuumcharge.errors import MatchingRegionError, SpecError, TruncationError
from vacuumcharge.friedel import (RadialChannel, RadialPotential, build_channels,
                                  diffuse_charge, discrete_gas_charges, friedel_sum,
                                  gas_charges, radial_phase_shift, riccati_phase,
                                  sphere_levels, square_well_phase_shift)


def _mod_pi_distance(a, b):
    d = (a - b) / math.pi
    return abs(d - round(d)) * math.pi


def test_riccati_phase_asymptote_and_sign():
    from scipy.special import spherical_jn
    x = np.array([50.0, 200.0])
    for l in (0, 1, 3):
        assert np.allclose(riccati_phase(l, x), x - l * math.pi / 2, atol=l * l / 50 + 1e-9)
        xs = np.linspace(0.5, 20, 50)
        rj = xs * spherical_jn(l, xs)
        assert np.all(np.sign(np.sin(riccati_phase(l, xs))) == np.sign(rj))


def test_square_well_phase_matches_oracle(oracle):
    for row in oracle["square_well_radial"]:
        pot = RadialPotential.square_well(row["depth"], row["radius"])
        eta = radial_phase_shift(pot, row["E"], row["l"])
        assert _mod_pi_distance(eta, row["eta_mod_pi"]) < 1e-9
        closed = square_well_phase_shift(row["E"], row["depth"], row["radius"], l=row["l"])
        assert _mod_pi_distance(closed, row["eta_mod_pi"]) < 1e-9


def test_levinson_branch_for_one_bound_state():
    # depth 2, radius 1 binds one s level; eta_0(0+) = pi
    pot = RadialPotential.square_well(2.0, 1.0)
    eta = radial_phase_shift(pot, np.array([1e-8, 1.0]), 0)
    assert eta[0] == pytest.approx(math.pi, abs=1e-3)
    assert eta[1] == pytest.approx(square_well_phase_shift(1.0, 2.0, 1.0) + math.pi, abs=1e-9)


def test_hard_sphere_phase():
    pot = RadialPotential.hard_sphere(1.0)
    assert radial_phase_shift(pot, 0.5, 0) == pytest.approx(-1.0, abs=1e-10)


def test_hard_sphere_friedel_oracle(oracle):
    h = oracle["hard_sphere"]
    E = h["k_F"] ** 2 / 2
    chans = build_channels(RadialPotential.hard_sphere(h["a"]), E)
    assert np.allclose([c.eta for c in chans[:6]], h["eta"][:len(chans[:6])], atol=1e-9)
    assert friedel_sum(chans, E).Q_c == pytest.approx(h["Q_c"], abs=1e-6)


def test_weights_and_validation():
    assert RadialChannel(2, 0.1).weight == 10
    with pytest.raises(ValueError):
        RadialChannel(-1, 0.0)
    with pytest.raises(SpecError):
        RadialPotential((1.0, 0.5), (0.0, 0.0))


def test_matching_region_guard():
    with pytest.raises(MatchingRegionError):
        radial_phase_shift(RadialPotential.square_well(1.0, 9.5), 1.0, 0, R=10.0)


def test_friedel_sum_and_diffuse_cancel():
    pot = RadialPotential.square_well(2.0, 1.0)
    E_F, R = 2.0, 30.0
    chans = build_channels(pot, E_F)
    fs = friedel_sum(chans, E_F, Z=2)
    Qd, prof = diffuse_charge(chans, E_F, R)
    assert abs(fs.Q_c + Qd) < 1e-12
    assert fs.residual_Z == pytest.approx(fs.Q_c - 2)
    # the profile integral agrees up to O(1/(k_F R))
    assert trapezoid(prof.radial_density, prof.r) == pytest.approx(Qd, abs=5 / (2 * R))


def test_truncation_error_when_not_converged():
    chans = [RadialChannel(l, 0.5) for l in range(3)]
    with pytest.raises(TruncationError):
        friedel_sum(chans, 1.0)


def test_free_sphere_levels():
    lv = sphere_levels(RadialPotential.free(), 10.0, 0, (0.0, 3.0))
    assert np.allclose(lv.k, np.arange(1, lv.n.size + 1) * math.pi / 10, atol=1e-10)


def test_bound_level_in_sphere():
    pot = RadialPotential.square_well(2.0, 1.0)
    lv = sphere_levels(pot, 10.0, 0, (0.0, 1.0))
    assert lv.E[0] < 0 and lv.n[0] == 1
    # infinite-space s bound state: q cot(q) = -kappa with q^2 + kappa^2 = 4
    from scipy.optimize import brentq
    kap = brentq(lambda k: math.sqrt(4 - k * k) / math.tan(math.sqrt(4 - k * k)) + k, 0.01, 1.9)
    assert lv.E[0] == pytest.approx(-kap ** 2 / 2, abs=1e-4)


def test_discrete_gas_is_neutral():
    g = gas_charges(RadialPotential.square_well(2.0, 1.0), 10.0, 1.0, [0, 1])
    assert g.Q == 0 and g.Q_c + g.Q_d == 0
    assert all(r["Q"] == 0 for r in g.per_channel)


def test_discrete_gas_rejects_mismatched_channels():
    free = sphere_levels(RadialPotential.free(), 10.0, 0, (0.0, 2.0))
    pert = sphere_levels(RadialPotential.free(), 10.0, 1, (0.0, 2.0))
    with pytest.raises(ValueError):
        discrete_gas_charges([free], [pert], 1.0)
