import json
import math

import pytest
import yaml

from vacuumcharge import cli, io
from vacuumcharge.config import HBARC, Units

FREE_BAG = {"R": 1.0, "mass": 0.0, "n_levels": 10}
SHIFTED = {"R": 1.0, "segments": [[-1.0, 1.0, 0.0, -0.3]], "n_levels": 10}


def _write(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


def _results(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


def test_bag_free_levels(tmp_path):
    out = tmp_path / "bag"
    assert cli.main(["bag", "--config", str(_write(tmp_path, FREE_BAG)), "--out", str(out)]) == 0
    header, rows = io.read_csv(out / "bag_levels.csv")
    assert header[:3] == ["n", "E_free", "E_closed_form"]
    for r in rows:
        n = int(r[0])
        assert float(r[3]) == pytest.approx((2 * n - 1) * math.pi / 4, abs=1e-10)
    man = io.load_manifest(out / "manifest.json")
    assert man["status"] == "ok" and "bag_levels.csv" in man["outputs"]
    assert man["config"]["R"] == 1.0 and man["wall_clock_s"] >= 0


def test_outputs_are_deterministic_and_replayable(tmp_path):
    cfg = _write(tmp_path, SHIFTED)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out in (a, b):
        assert cli.main(["regularize", "--config", str(cfg), "--out", str(out)]) == 0
    assert _results(a) == _results(b)
    assert cli.main(["replay", str(a / "manifest.json"), "--out", str(c)]) == 0
    assert _results(a) == _results(c)


def test_manifest_written_before_failure(tmp_path):
    out = tmp_path / "fail"
    cfg = _write(tmp_path, {"R": 20.0, "mass": 1.0, "model": {"delta": {"lam": math.pi / 4}},
                            "window": [-0.5, 0.5]})
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_ERROR
    man = io.load_manifest(out / "manifest.json")
    assert man["status"] == "failed"
    err = json.loads((out / "error.json").read_text())["error"]
    assert err["code"] == "zero_mode"


@pytest.mark.parametrize("cfg, code", [
    ({"R": -1.0}, "invalid_spec"),
    ({"R": 1.0, "tolerances": {"bogus": 1}}, "invalid_spec"),
    ({"R": 1.0, "model": {"mystery": {}}}, "invalid_spec"),
])
def test_error_json(tmp_path, capsys, cfg, code):
    out = tmp_path / "err"
    assert cli.main(["spectrum", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) != 0
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload["error"]["code"] == code


def test_missing_config(tmp_path, capsys):
    assert cli.main(["charge", "--config", str(tmp_path / "nope.yaml"),
                     "--out", str(tmp_path / "o")]) == cli.EXIT_ERROR
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "file_not_found"


def test_units_single_constant():
    u = Units("mev-fm")
    assert u.length_in(HBARC) == pytest.approx(1.0)
    assert u.length_out(u.length_in(5.6)) == pytest.approx(5.6)
    assert Units("natural").length_in(5.6) == 5.6


def test_spectrum_and_charge_commands(tmp_path):
    cfg = {"R": 20.0, "mass": 1.0, "model": {"delta": {"lam": 0.4}}, "cutoffs": [-3.0],
           "phase_shifts": True, "window": [-3.0, 3.0]}
    p = _write(tmp_path, cfg)
    assert cli.main(["spectrum", "--config", str(p), "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "phase_shifts.csv").exists()
    cfg.pop("window")
    p = _write(tmp_path, cfg)
    assert cli.main(["charge", "--config", str(p), "--out", str(tmp_path / "c")]) == 0
    rep = json.loads((tmp_path / "c" / "charge_report.json").read_text())
    assert rep["continuum"]["Qc_phase_form"] == pytest.approx(0.8 / math.pi, abs=1e-6)
    _, rows = io.read_csv(tmp_path / "c" / "charges.csv")
    assert rows[0][3] == "0"


def test_chiral_command(tmp_path):
    cfg = {"chiral": {"x": [-1.0, 0.0, 1.0], "theta": [0.0, 0.7, 0.2]}, "window": [-8, 8]}
    out = tmp_path / "ch"
    assert cli.main(["chiral", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 0
    assert json.loads((out / "chiral_report.json").read_text())["max_difference"] < 1e-8


def test_friedel_command(tmp_path):
    cfg = {"friedel": {"square_well": {"depth": 2.0, "radius": 1.0}, "R": 10.0, "E_F": 1.0,
                       "l_values": [0, 1]}}
    out = tmp_path / "fr"
    assert cli.main(["friedel", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 0
    rep = json.loads((out / "friedel_report.json").read_text())
    assert abs(rep["sum"]) < 1e-12 and rep["discrete"]["Q"] == 0


def test_sweep_with_figures(tmp_path):
    cfg = {"R": 20.0, "mass": 1.0, "sweep": {"kind": "delta", "values": [0.0, 0.2, 1.2],
                                             "cutoff": -2.0}}
    out = tmp_path / "sw"
    assert cli.main(["sweep", "--config", str(_write(tmp_path, cfg)), "--out", str(out),
                     "--figures", "--threads", "2"]) == 0
    _, rows = io.read_csv(out / "sweep.csv")
    assert [r[2] for r in rows] == ["0", "0", "-1"]
    assert (out / "sweep.png").stat().st_size > 0
