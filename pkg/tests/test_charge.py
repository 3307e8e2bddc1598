import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from vacuumcharge.charge import (ContinuationReport, ContinuationSchedule, charge_split,
                                 continuum_Qc, continuum_Qd, default_energy_grid,
                                 delta_charges, eta_minus_infinity, fermi_shift, fermi_window,
                                 match_levels, total_charge, untracked_charge)
from vacuumcharge.dirac import phase_shift_table
from vacuumcharge.errors import ScheduleTooCoarseError, TruncationError, ZeroModeError
from vacuumcharge.model import BoxGeometry, PotentialSpec

BOX1 = BoxGeometry(1.0)
BOX20 = BoxGeometry(20.0)


def test_free_ledger_is_identity():
    led = match_levels(PotentialSpec.free(BOX1), BOX1, (-10.0, 10.0))
    assert all(p.E_free == p.E_perturbed for p in led.pairs)
    fw = fermi_window(led, -5.0)
    dec = charge_split(led, fw)
    assert (dec.Q_int, dec.Qc_int, dec.Qd_int) == (0, 0, 0)


def test_small_constant_shift_has_no_flips():
    spec = PotentialSpec.constant(BOX1, V=-0.3)
    led = match_levels(spec, BOX1, (-10.0, 10.0))
    assert np.allclose([p.E_perturbed - p.E_free for p in led.pairs], -0.3, atol=1e-10)
    assert led.sign_flips == ()
    # E_F = -(2K - 1) pi/4 sits on a free level; the nearest gap midpoint is used
    fw = fermi_window(led, -7 * math.pi / 4)
    dec = charge_split(led, fw)
    assert dec.Q_int == 0 and dec.Qc_int + dec.Qd_int == 0


def test_one_level_dives_for_large_shift():
    spec = PotentialSpec.constant(BOX1, V=-1.8)
    led = match_levels(spec, BOX1, (-10.0, 10.0))
    assert len(led.sign_flips) == 1 and len(led.dives) == 1
    fw = fermi_window(led, -5.0)
    assert total_charge(led, fw) == 0
    # the dived level counts once it is filled by hand
    assert total_charge(led, fw, fill_by_hand=True) == 1
    dec = charge_split(led, fw)
    assert (dec.Qc_int, dec.Qd_int) == (-1, 1)
    assert dec.method_tags["energy_sign_Q"] == 1


@pytest.fixture(scope="module")
def delta08():
    spec = PotentialSpec.delta_model(BOX20, 0.8, 1.0)
    return match_levels(spec, BOX20, (-6.0, 6.0))


def test_dropping_fermi_shift_changes_the_count(delta08):
    fw = fermi_window(delta08, -5.0)
    assert total_charge(delta08, fw) == 0
    assert untracked_charge(delta08, fw) == 1


def test_fermi_images_are_ordered(delta08):
    fw = fermi_window(delta08, -5.0)
    assert fw.E_F_prime < fw.E_F < 0 < fw.E_F_doubleprime


def test_continuation_report_records_steps():
    rep = ContinuationReport()
    spec = PotentialSpec.constant(BOX1, V=-0.3)
    match_levels(spec, BOX1, (-5.0, 5.0), ContinuationSchedule(4), rep)
    assert rep.couplings[0] == 0.0 and rep.couplings[-1] == 1.0
    assert 0 < rep.max_ratio < 1


def test_coarse_schedule_rejected_without_refinement():
    spec = PotentialSpec.constant(BOX1, V=-3.0)
    with pytest.raises(ScheduleTooCoarseError):
        match_levels(spec, BOX1, (-6.0, 6.0), ContinuationSchedule(1, adaptive=False))


def test_continuation_step_through_zero_mode_rejected():
    # coupling 1/2 of lam = pi/2 lands on the zero mode lam = pi/4
    spec = PotentialSpec.delta_model(BOX20, math.pi / 2, 1.0)
    with pytest.raises(ZeroModeError):
        match_levels(spec, BOX20, (-2.0, 2.0), ContinuationSchedule(2))


@pytest.mark.parametrize("eta, R, expected", [(0.0, 5.0, 0.0), (0.8, 100.0, -0.008)])
def test_fermi_shift(eta, R, expected):
    assert fermi_shift(eta, R) == pytest.approx(expected, abs=1e-15)


def test_fermi_shift_needs_positive_R():
    with pytest.raises(ValueError):
        fermi_shift(0.1, 0.0)


@pytest.fixture(scope="module")
def delta04_table():
    spec = PotentialSpec.delta_model(BOX20, 0.4, 1.0)
    return spec, phase_shift_table(spec, BOX20, default_energy_grid(spec))


def test_continuum_Qc_delta(delta04_table):
    spec, table = delta04_table
    qc = continuum_Qc(table, spec)
    assert qc.phase_form == pytest.approx(0.8 / math.pi, abs=1e-6)
    assert qc.integral_form == pytest.approx(0.8 / math.pi, abs=1e-15)


def test_continuum_Qd_profile(delta04_table):
    spec, table = delta04_table
    x = np.linspace(-BOX20.R, BOX20.R, 4001)
    Qd, prof = continuum_Qd(table, spec, BOX20, x=x)
    assert Qd == pytest.approx(-0.8 / math.pi, abs=1e-6)
    assert prof.tail_level == pytest.approx(-0.8 / (2 * math.pi * BOX20.R), rel=1e-5)
    assert trapezoid(prof.density, x) == pytest.approx(Qd, abs=1e-3)
    far = np.abs(x) > 5
    assert np.mean(prof.density[far]) == pytest.approx(prof.tail_level, rel=0.05)


def test_continuum_free_is_zero():
    box = BoxGeometry(5.0)
    spec = PotentialSpec.free(box, 1.0)
    table = phase_shift_table(spec, box, default_energy_grid(spec))
    # phase accumulated over k x ~ 1e4 rad leaves roundoff of order 1e-12
    assert continuum_Qc(table, spec).phase_form == pytest.approx(0.0, abs=1e-10)


def test_scalar_potential_does_not_enter_Qc():
    box = BoxGeometry(4.0)
    spec = PotentialSpec.square_well(box, 1.0, V=0.7, S=-0.5, mass=1.0)
    qc = continuum_Qc(phase_shift_table(spec, box, default_energy_grid(spec)), spec)
    assert abs(qc.difference) < 1e-5
    assert qc.integral_form == pytest.approx(-1.4 / math.pi)


def test_short_table_raises():
    spec = PotentialSpec.delta_model(BOX20, 0.4, 1.0)
    table = phase_shift_table(spec, BOX20, np.array([-3.0, -2.0, 2.0, 3.0]))
    with pytest.raises(TruncationError):
        eta_minus_infinity(table, spec)


def test_delta_charges_rows():
    rows = delta_charges(0.2, 1.0, 20.0, cutoffs=(-5.0,), with_continuum=False)
    assert rows[0]["Q_int"] == 0 and rows[0]["Qc_cont"] is None
