import math

import pytest

from vacuumcharge.errors import SpecError
from vacuumcharge.model import (BoxGeometry, ChargeDecomposition, FermiWindow, Level,
                                LevelLedger, LevelPair, PointTerm, PotentialSpec, Segment,
                                Spectrum, load_spec, save_spec, spec_from_config,
                                validate_potential)


@pytest.fixture
def box():
    return BoxGeometry(1.0)


@pytest.mark.parametrize("R", [0.0, -1.0, math.inf, math.nan])
def test_box_rejects_bad_width(R):
    with pytest.raises(SpecError):
        BoxGeometry(R)


def test_integrals_include_point_terms(box):
    spec = PotentialSpec.from_arrays([[-1, 0, 0.5, -0.3], [0, 1, 0.0, 0.2]], [[0.1, -0.8]])
    assert spec.integral_V() == pytest.approx(-0.3 + 0.2 - 0.8)
    assert spec.integral_S() == pytest.approx(0.5)


def test_delta_model_strength(box):
    spec = PotentialSpec.delta_model(box, 0.4, 1.0)
    assert spec.point_terms == (PointTerm(0.0, -0.8),)
    assert spec.integral_V() == pytest.approx(-0.8)


def test_square_well_support_and_parity():
    box = BoxGeometry(2.0)
    spec = PotentialSpec.square_well(box, 0.5, V=-1.0, S=0.3)
    assert spec.support() == pytest.approx(0.5)
    assert spec.is_even()
    assert not PotentialSpec.from_arrays([[-2, 0, 0, 1], [0, 2, 0, 0]]).is_even()


def test_validate_merges_and_snaps(box):
    spec = PotentialSpec.from_arrays([[-1, 0, 0, 0.5], [0, 0.5, 0, 0.5], [0.5, 1, 0, 0]])
    out = validate_potential(spec, box)
    assert len(out.segments) == 2
    assert out.segments[0] == Segment(-1.0, 0.5, 0.0, 0.5)


@pytest.mark.parametrize("segs, pts", [
    ([[-1, 0.2, 0, 0], [0.3, 1, 0, 0]], []),        # gap
    ([[-1, 0.4, 0, 0], [0.3, 1, 0, 0]], []),        # overlap
    ([[-0.9, 1, 0, 0]], []),                        # not covering the box
    ([[-1, 1, 0, math.nan]], []),                   # non-finite
    ([[-1, 1, 0, 0]], [[1.0, 0.3]]),                # point term on the wall
])
def test_validate_rejects(box, segs, pts):
    with pytest.raises(SpecError):
        validate_potential(PotentialSpec.from_arrays(segs, pts), box)


def test_scaled_and_free(box):
    spec = PotentialSpec.delta_model(box, 0.4)
    assert spec.scaled(0.5).integral_V() == pytest.approx(-0.4)
    assert spec.without_potential().is_free()


def test_spectrum_requires_order():
    with pytest.raises(ValueError):
        Spectrum((Level(1.0), Level(0.5)), (0, 2))


def test_ledger_checks_bijection_and_order():
    ok = LevelLedger((LevelPair(-1.0, -1.2, "+", 0), LevelPair(1.0, 0.8, "+", 1)))
    assert ok.sign_flips == ()
    with pytest.raises(ValueError):
        LevelLedger((LevelPair(-1.0, 0.9, "+", 0), LevelPair(1.0, 0.8, "+", 1)))
    flip = LevelLedger((LevelPair(0.5, -0.2, "+", 1),))
    assert len(flip.dives) == 1 and flip.rises == ()


def test_fermi_window_signs():
    with pytest.raises(ValueError):
        FermiWindow(1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        FermiWindow(-1.0, -1.0, -1.0)


def test_charge_identity_enforced():
    assert ChargeDecomposition(0, 1, -1).to_dict()["Q_int"] == 0
    with pytest.raises(ValueError):
        ChargeDecomposition(0, 1, 0)


def test_config_round_trip(tmp_path):
    cfg = {"R": 2.0, "mass": 1.0, "segments": [[-2, -0.5, 0, 0], [-0.5, 0.5, 0.1, -1],
                                               [0.5, 2, 0, 0]], "point_terms": [[0.0, -0.4]]}
    spec, box = spec_from_config(cfg)
    for name in ("spec.yaml", "spec.json"):
        save_spec(spec, box, tmp_path / name)
        spec2, box2 = load_spec(tmp_path / name)
        assert spec2 == spec and box2 == box


def test_config_errors():
    with pytest.raises(SpecError):
        spec_from_config({"mass": 1.0})
    with pytest.raises(SpecError):
        spec_from_config({"R": 1.0, "segments": [[-1, 1, 0]]})


def test_point_term_at_origin_is_not_free(box):
    spec = PotentialSpec.delta_model(box, 0.4)
    assert spec.support() == 0.0
    assert not spec.is_free()
    assert PotentialSpec.free(box).is_free()
