import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vacuumcharge.dirac import (born_phase_shift, delta_model_bound_state,
                                delta_model_phase_shifts, level_index, phase_shift_table,
                                phase_shifts, propagate, solve_spectrum,
                                solve_transformed_spectrum, solve_with_walls,
                                transfer_matrix, transform_potential, wavefunction)
from vacuumcharge.errors import MatchingRegionError, SpecError, ZeroModeError
from vacuumcharge.model import BoxGeometry, PotentialSpec
from vacuumcharge.rootfind import CoarseGridWarning

finite = st.floats(-20, 20, allow_nan=False)


@given(w=st.floats(-3, 3), E=finite, S=finite, V=finite, m=st.floats(0, 10), P=finite)
def test_transfer_matrix_is_unimodular(w, E, S, V, m, P):
    T = transfer_matrix(w, E, S, V, m, P)
    scale = max(1.0, np.abs(T).max() ** 2)
    assert abs(np.linalg.det(T) - 1.0) < 1e-9 * scale


@given(w=st.floats(0, 2), E=st.floats(-5, 5), V=st.floats(-5, 5), m=st.floats(0, 3))
def test_negative_width_inverts(w, E, V, m):
    T = transfer_matrix(w, E, 0.0, V, m) @ transfer_matrix(-w, E, 0.0, V, m)
    assert np.allclose(T, np.eye(2), atol=1e-8 * max(1.0, math.exp(2 * m * w)))


def test_transfer_matches_matrix_exponential():
    from scipy.linalg import expm
    E, S, V, m, w = 0.7, 0.4, -1.1, 1.3, 0.9
    M = m + S
    A = np.array([[0.0, E - V + M], [M + V - E, 0.0]])
    assert np.allclose(transfer_matrix(w, E, S, V, m), expm(A * w), atol=1e-14)


def test_backward_propagation_round_trip():
    box = BoxGeometry(1.0)
    spec = PotentialSpec.from_arrays([[-1, -0.2, 0.3, 0.5], [-0.2, 1, 0, -0.7]],
                                     [[0.4, -0.6]], mass=0.5)
    psi0 = np.array([0.6, 0.8])
    fwd, _ = propagate(spec, 1.3, -1.0, 1.0, psi0)
    back, _ = propagate(spec, 1.3, 1.0, -1.0, fwd[0])
    assert np.allclose(back[0], psi0, atol=1e-12)


def test_free_massless_levels():
    box = BoxGeometry(1.0)
    sp = solve_spectrum(PotentialSpec.free(box), box, (-10.0, 10.0))
    n = np.array([lv.label for lv in sp.levels])
    assert np.allclose(sp.energies, (2 * n - 1) * math.pi / 4, rtol=1e-12)
    assert set(n) == set(range(-5, 7))


@pytest.mark.parametrize("key", ["square_well_box", "asymmetric_box"])
def test_spectrum_matches_high_precision_oracle(oracle, key):
    o = oracle[key]
    box = BoxGeometry(o["R"])
    spec = PotentialSpec.from_arrays(o["segments"], [], o["mass"])
    E = solve_spectrum(spec, box, tuple(o["window"])).energies
    assert E.size == len(o["levels"])
    assert np.max(np.abs(E - o["levels"])) < 1e-10


@given(V=st.floats(-1.2, 1.2), m=st.floats(0, 2))
def test_constant_V_shifts_every_level(V, m):
    box = BoxGeometry(1.0)
    free = solve_spectrum(PotentialSpec.free(box, m), box, (-8.0, 8.0))
    pert = solve_spectrum(PotentialSpec.constant(box, V, mass=m), box, (-8.0 + V, 8.0 + V))
    f = {lv.label: lv.E for lv in free.levels}
    shifts = [lv.E - f[lv.label] for lv in pert.levels if lv.label in f]
    assert len(shifts) >= len(free) - 1
    assert np.allclose(shifts, V, atol=1e-10)


def test_labels_are_deformation_invariant():
    box = BoxGeometry(1.0)
    spec = PotentialSpec.square_well(box, 0.4, V=-3.0, S=0.5, mass=1.0)
    sp = solve_spectrum(spec, box, (-15.0, 15.0))
    labels = [lv.label for lv in sp.levels]
    assert labels == list(range(labels[0], labels[0] + len(labels)))
    mid = 0.5 * (sp.levels[3].E + sp.levels[4].E)
    assert math.floor(level_index(mid, spec, box)) == labels[3]


def test_general_walls_reduce_to_bag_condition():
    box = BoxGeometry(1.0)
    spec = PotentialSpec.square_well(box, 0.3, V=0.8, mass=0.5)
    a = solve_spectrum(spec, box, (-9.0, 9.0)).energies
    b = solve_with_walls(spec, box, math.pi / 4, -math.pi / 4, (-9.0, 9.0))
    assert np.allclose(a, b, atol=1e-11)


def test_wavefunction_normalized():
    from scipy.integrate import trapezoid
    box = BoxGeometry(1.0)
    spec = PotentialSpec.square_well(box, 0.5, V=-1.0, mass=1.0)
    E = solve_spectrum(spec, box, (0.0, 5.0)).energies[0]
    x = np.linspace(-1, 1, 4001)
    psi = wavefunction(spec, box, E, x)
    assert trapezoid((psi ** 2).sum(axis=1), x) == pytest.approx(1.0, abs=1e-6)
    assert psi[0, 0] == pytest.approx(psi[0, 1], abs=1e-9)
    assert psi[-1, 0] == pytest.approx(-psi[-1, 1], abs=1e-9)


def test_delta_bound_state_and_parity():
    box = BoxGeometry(20.0)
    spec = PotentialSpec.delta_model(box, 0.5, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseGridWarning)
        sp = solve_spectrum(spec, box, (-0.99, 0.99))
    bound = delta_model_bound_state(1.0, 0.5)
    assert len(sp) == 1
    assert sp.levels[0].E == pytest.approx(math.cos(1.0), abs=1e-9)
    assert sp.levels[0].parity == "+"
    assert bound.E == pytest.approx(math.cos(1.0))


def test_bound_state_profile_normalized():
    from scipy.integrate import quad
    b = delta_model_bound_state(1.0, 0.3)
    dens = lambda x: float((b.profile(x) ** 2).sum())
    assert 2 * quad(dens, 0, 50)[0] == pytest.approx(1.0, rel=1e-8)


def test_bound_state_rejections():
    with pytest.raises(ZeroModeError):
        delta_model_bound_state(1.0, math.pi / 4)
    with pytest.raises(ValueError):
        delta_model_bound_state(1.0, -0.3)


def test_zero_mode_rejected_by_solver():
    box = BoxGeometry(20.0)
    with pytest.raises(ZeroModeError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CoarseGridWarning)
            solve_spectrum(PotentialSpec.delta_model(box, math.pi / 4, 1.0), box, (-0.5, 0.5))


@pytest.mark.parametrize("lam", [0.3, 1.0, 2.0])
def test_delta_phase_shifts_match_tangent_form(lam):
    box = BoxGeometry(10.0)
    spec = PotentialSpec.delta_model(box, lam, 1.0)
    E = np.array([-30.0, -2.0, -1.2, 1.1, 3.0, 40.0])
    ep, em = phase_shifts(spec, box, E)
    k = np.sqrt(E ** 2 - 1)
    for eta, c in ((ep, (E + 1) / k), (em, (E - 1) / k)):
        assert np.allclose(np.tan(eta), c * math.tan(lam), rtol=1e-9, atol=1e-9)
    cp, cm = delta_model_phase_shifts(E, 1.0, lam)
    assert np.allclose(ep, cp, atol=1e-9) and np.allclose(em, cm, atol=1e-9)


def test_phase_table_tends_to_born_limits():
    box = BoxGeometry(10.0)
    spec = PotentialSpec.square_well(box, 1.0, V=0.6, S=-0.4, mass=1.0)
    E = np.array([-4000.0, 4000.0])
    t = phase_shift_table(spec, box, E)
    born = born_phase_shift(spec, E)
    assert np.allclose(t.eta_total, born, atol=2e-3)
    assert t.branch(-1).E[0] == -4000.0


def test_phase_shift_requirements():
    box = BoxGeometry(1.0)
    wide = PotentialSpec.square_well(box, 0.95, V=1.0)
    with pytest.raises(MatchingRegionError):
        phase_shifts(wide, box, 3.0)
    odd = PotentialSpec.from_arrays([[-1, 0, 0, 1], [0, 1, 0, 0]])
    with pytest.raises(SpecError):
        phase_shifts(odd, box, 3.0)
    with pytest.raises(ValueError):
        phase_shifts(PotentialSpec.delta_model(box, 0.2, 1.0), box, 0.5)


@pytest.mark.parametrize("segs, pts, m", [
    ([[-1, 1, 0, -0.7]], [], 1.0),
    ([[-1, -0.3, 0, 0], [-0.3, 0.3, 0.4, -2.0], [0.3, 1, 0, 0]], [], 0.8),
    ([[-1, 1, 0, 0]], [[0.2, -0.9]], 0.5),
])
def test_rotated_frame_has_same_spectrum(segs, pts, m):
    box = BoxGeometry(1.0)
    spec = PotentialSpec.from_arrays(segs, pts, m)
    direct = solve_spectrum(spec, box, (-6.0, 6.0)).energies
    rotated = solve_transformed_spectrum(transform_potential(spec, box), (-6.0, 6.0))
    assert direct.size == rotated.size
    assert np.max(np.abs(direct - rotated)) < 1e-8
