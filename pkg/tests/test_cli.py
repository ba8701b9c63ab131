import json
import logging
import math
import pathlib
import pytest
import hpi
from hpi import cli, factories, snapshot
from hpi import exact_solution as es
from hpi import mc_engine as mc
from hpi.contour_analysis import ContainmentRow, WallRow


EXACT = pathlib.Path(__file__).parent / "data" / "exact"
SIMULATE = ["simulate", "--N", "8", "--M", "16", "--sweeps", "352", "--thermalization", "32", "--stride", "10",
            "--snapshots", "4", "--seed", "7"]


def _rows(path):
    return factories.read_table(path)[1]


def test_tension(tmp_path, capsys):
    assert cli.main(["tension", "--out", str(tmp_path), "--theta-grid=-0.3,0,0.3", "--k1", "0.6"]) == 0
    assert "tension.csv" in capsys.readouterr().out
    rows = _rows(tmp_path / "tension.csv")
    c = hpi.Couplings.create(0.6)
    assert [r.theta for r in rows] == [-0.3, 0.0, 0.3]
    assert rows[1].tau == pytest.approx(2 * (c.k2 - c.dual1), abs=1e-10)
    assert rows[0].tau == pytest.approx(rows[2].tau, abs=1e-12)
    assert all(r.stiffness > 0 for r in rows)


def test_tension_json(tmp_path):
    assert cli.main(["tension", "--out", str(tmp_path), "--format", "json", "--theta-grid", "0,1.56"]) == 0
    rows = _rows(tmp_path / "tension.json")
    assert [r.theta for r in rows] == [0.0]


def test_tension_from_config(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("k1 = 0.5\nk2 = 0.8\ntheta_grid = 0\n")
    assert cli.main(["tension", "--config", str(config), "--out", str(tmp_path), "--k2", "0.7"]) == 0
    c = hpi.Couplings.create(0.5, 0.7)
    assert _rows(tmp_path / "tension.csv")[0].tau == pytest.approx(2 * (c.k2 - c.dual1), abs=1e-10)


def test_profile(tmp_path, couplings):
    assert cli.main(["profile", "--out", str(tmp_path), "--alpha-grid=-1:1:5"]) == 0
    rows = _rows(tmp_path / "profile.csv")
    assert [r.alpha for r in rows] == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert rows[2].magnetization == 0.0
    assert rows[4].magnetization < 0
    assert hpi.verify().profile(rows).antisymmetric(1e-12).bounded(es.spontaneous_magnetization(couplings))


def test_profile_exact_values(tmp_path):
    assert cli.main(["profile", "--out", str(tmp_path), "--k1", "0.6", "--alpha-grid=-1,0,1,4"]) == 0
    rows = _rows(tmp_path / "profile.csv")
    expected = _rows(EXACT / "profile.csv")
    assert [r.alpha for r in rows] == [r.alpha for r in expected]
    for row, want in zip(rows, expected):
        assert row.z == pytest.approx(want.z, abs=1e-6)
        assert row.magnetization == pytest.approx(want.magnetization, abs=1e-6)


def test_groundstate(tmp_path, capsys, caplog):
    caplog.set_level(logging.INFO, logger="hpi")
    assert cli.main(["groundstate", "--out", str(tmp_path), "--samples", "4", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "Ornstein-Zernike coefficient: " in out
    rows = _rows(tmp_path / "groundstate.csv")
    assert [r.N for r in rows] == [2 ** e for e in range(6, 15)]
    assert rows[0].oz_fit == pytest.approx(-0.5, abs=0.05)
    assert abs(rows[-1].cross_ratio - 1) < abs(rows[0].cross_ratio - 1)
    assert all(r.mean_increment >= 0 for r in rows)
    assert rows[-1].mean_increment == pytest.approx(math.tan(math.pi / 8), rel=0.2)
    assert "N=64: " in caplog.text and "from their chord" in caplog.text


def test_groundstate_flat(tmp_path, capsys):
    assert cli.main(["groundstate", "--out", str(tmp_path), "--theta", "0", "--samples", "2"]) == 0
    assert "degenerate (flat path)" in capsys.readouterr().out
    rows = _rows(tmp_path / "groundstate.csv")
    assert all(math.isnan(r.oz_fit) and math.isnan(r.cross_ratio) for r in rows)
    assert all(r.mean_increment == 0.0 and r.log_binomial == 0.0 for r in rows)


def test_analyze_empty_directory(tmp_path, capsys):
    empty = tmp_path / "snaps"
    empty.mkdir()
    assert cli.main(["analyze", "--out", str(tmp_path), "--snapshot-dir", str(empty)]) == 4
    assert "No snapshots" in capsys.readouterr().err


def test_analyze_ground_snapshots(tmp_path):
    snaps = tmp_path / "snaps"
    lattice = mc.build_boundary(0.0, 6, 8)
    for index in range(3):
        snapshot.write_snapshot(snaps, index, lattice.spins, 0.0)
    assert cli.main(["analyze", "--out", str(tmp_path), "--snapshot-dir", str(snaps), "--radii", "2,4"]) == 0
    assert _rows(tmp_path / "containment.csv") == [ContainmentRow(2.0, 1.0), ContainmentRow(4.0, 1.0)]
    assert _rows(tmp_path / "width.csv") == []
    assert _rows(tmp_path / "wall.csv") == []
    tail = _rows(tmp_path / "tail.csv")
    assert [(r.L, r.tail_prob) for r in tail] == [(5, 1.0), (6, 0.0)]


def test_analyze_wall_snapshots(tmp_path):
    snaps = tmp_path / "snaps"
    lattice = mc.build_boundary(math.pi / 2, 4, 4)
    for index in range(2):
        snapshot.write_snapshot(snaps, index, lattice.spins, math.pi / 2)
    assert cli.main(["analyze", "--out", str(tmp_path), "--snapshot-dir", str(snaps)]) == 0
    assert _rows(tmp_path / "wall.csv") == [WallRow(4, 2, 0.0)]
    assert _rows(tmp_path / "containment.csv") == []


def test_simulate(tmp_path, capsys):
    assert cli.main(SIMULATE + ["--out", str(tmp_path)]) == 0
    assert "acceptance_rate" in capsys.readouterr().out
    assert sorted(p.name for p in (tmp_path / "snapshots").iterdir()) == [
        snapshot.snapshot_name(i) for i in (0, 8, 16, 24)]
    assert len(_rows(tmp_path / "field.csv")) == 8 * 32
    assert len(_rows(tmp_path / "measured_profile.csv")) == 32

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["samples"] == 32 and summary["chains"] == 1 and summary["seed"] == 7
    assert 0 < summary["acceptance_rate"] < 1
    assert summary["escape_rate"] == 0.0
    assert isinstance(summary["antisymmetric"], bool)
    assert summary["bulk_magnetization"] is None
    assert sorted(summary["z_unit"]) == sorted(es.Z_FORMS)
    assert summary["z_unit"]["stiffness"] == pytest.approx(es.z_scaling(1.0, 0.0, hpi.Couplings.create(0.6)))
    assert summary["m_star"] == pytest.approx(es.spontaneous_magnetization(hpi.Couplings.create(0.6)))

    # snapshots feed straight into analyze
    assert cli.main(["analyze", "--out", str(tmp_path / "analysis"),
                     "--snapshot-dir", str(tmp_path / "snapshots")]) == 0
    assert len(_rows(tmp_path / "analysis" / "containment.csv")) == 3


def test_simulate_determinism_reference_mode(tmp_path, reference_mode):
    first, second = tmp_path / "a", tmp_path / "b"
    assert cli.main(SIMULATE + ["--out", str(first), "--threads", "2"]) == 0
    assert cli.main(SIMULATE + ["--out", str(second), "--threads", "3"]) == 0
    for name in ("field.csv", "measured_profile.csv", "summary.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    for path in (first / "snapshots").iterdir():
        assert path.read_bytes() == (second / "snapshots" / path.name).read_bytes()


def test_simulate_chains(tmp_path):
    assert cli.main(SIMULATE + ["--out", str(tmp_path), "--chains", "2", "--snapshots", "2"]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["samples"] == 64 and summary["chains"] == 2
    names = sorted(p.name for p in (tmp_path / "snapshots").iterdir())
    assert names == [snapshot.snapshot_name(i) for i in (0, 16, 32, 48)]


def test_simulate_wall(tmp_path):
    wall = ["simulate", "--theta", repr(math.pi / 2), "--k1", "0.8", "--N", "16", "--M", "16", "--sweeps", "352",
            "--thermalization", "32", "--stride", "10", "--snapshots", "4", "--seed", "5", "--out", str(tmp_path)]
    assert cli.main(wall) == 0
    assert _rows(tmp_path / "measured_profile.csv") == []
    assert len(_rows(tmp_path / "field.csv")) == 16 * 32

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["z_unit"] is None and summary["profile_rms"] is None and summary["scale"] is None
    assert summary["antisymmetric"] is None
    assert summary["escape_rate"] == 0.0
    assert 0 < summary["bulk_magnetization"] <= 1

    analysis = ["analyze", "--out", str(tmp_path / "analysis"), "--snapshot-dir", str(tmp_path / "snapshots")]
    assert cli.main(analysis) == 0
    assert [r.N for r in _rows(tmp_path / "analysis" / "wall.csv")] == [16]


def test_simulate_strip_too_small(tmp_path, capsys):
    assert cli.main(["simulate", "--N", "8", "--M", "10", "--out", str(tmp_path)]) == 2
    assert "too small" in capsys.readouterr().err


def test_domain_error_exit_code(tmp_path, capsys):
    assert cli.main(["tension", "--k1", "0.3", "--out", str(tmp_path)]) == 2
    assert "hpi tension" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("kappa = 0.1\n")
    assert cli.main(["tension", "--config", str(config), "--out", str(tmp_path)]) == 2


def test_unknown_flag():
    with pytest.raises(SystemExit) as info:
        cli.main(["tension", "--kappa", "0.1"])
    assert info.value.code == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
    assert hpi.__version__ in capsys.readouterr().out


def test_commands_need_config():
    with pytest.raises(hpi.ConfigurationError):
        cli.cmd_tension()
