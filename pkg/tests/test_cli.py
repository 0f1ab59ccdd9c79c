import math
import os

import pytest

from spintomo import io as stio
from spintomo.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_full_pipeline_coherent(workdir, capsys):
    assert run("simulate", "--state", "coherent", "--two-j", "40", "--axis-plane",
               "--axes", "24", "--shots", "200", "--seed", "7",
               "--out", "meas.csv") == 0
    assert run("reconstruct", "meas.csv", "--mode", "in-plane", "--fold-north",
               "--out", "run") == 0
    assert run("analyze", "run_coeffs.csv") == 0
    out = capsys.readouterr().out
    assert "squeezing:" in out
    db = float(out.split("squeezing:")[1].split("dB")[0])
    assert abs(db) < 2.0  # coherent input at modest statistics; plumbing check
    assert run("render", "run_coeffs.csv", "--grid", "16x32", "--out", "img") == 0
    for name in ("run_coeffs.csv", "run_spectrum.csv", "run_grid.csv",
                 "run_coeffs_squeezing.csv", "img_grid.csv", "img.pgm"):
        assert os.path.exists(name), name


def test_pipeline_oat_detects_squeezing(workdir, capsys):
    assert run("simulate", "--state", "oat", "--two-j", "40", "--chi", "0.05",
               "--axes", "24", "--shots", "200", "--seed", "5",
               "--out", "oat.csv") == 0
    assert run("reconstruct", "oat.csv", "--mode", "in-plane", "--fold-north",
               "--out", "oat") == 0
    assert run("analyze", "oat_coeffs.csv") == 0
    out = capsys.readouterr().out
    db = float(out.split("squeezing:")[1].split("dB")[0])
    assert db < -2.0


def test_pipeline_determinism(workdir):
    for tag in ("a", "b"):
        assert run("simulate", "--state", "coherent", "--two-j", "20", "--axes", "8",
                   "--shots", "40", "--seed", "123", "--out", f"{tag}.csv") == 0
        assert run("reconstruct", f"{tag}.csv", "--mode", "in-plane",
                   "--out", tag) == 0
        assert run("analyze", f"{tag}_coeffs.csv", "--out", f"{tag}_sq.csv") == 0
    for suffix in (".csv", "_coeffs.csv", "_spectrum.csv", "_grid.csv", "_sq.csv"):
        a = open(f"a{suffix}", "rb").read()
        b = open(f"b{suffix}", "rb").read()
        assert a == b, suffix


def test_seed_changes_output(workdir):
    run("simulate", "--two-j", "20", "--axes", "4", "--shots", "10", "--seed", "1",
        "--out", "s1.csv")
    run("simulate", "--two-j", "20", "--axes", "4", "--shots", "10", "--seed", "2",
        "--out", "s2.csv")
    assert open("s1.csv", "rb").read() != open("s2.csv", "rb").read()


def test_reconstruct_empty_csv_exits_2(workdir, capsys):
    with open("empty.csv", "w") as fh:
        fh.write("theta,phi,weight,two_j,two_m\n")
    assert run("reconstruct", "empty.csv") == 2
    assert "no measurement rows" in capsys.readouterr().err


def test_reconstruct_invalid_rows_exit_2(workdir, capsys):
    with open("bad.csv", "w") as fh:
        fh.write("theta,phi,weight,two_j,two_m\n0.1,0.0,1.0,40,31\n")
    assert run("reconstruct", "bad.csv") == 2
    assert "parity" in capsys.readouterr().err


def test_missing_input_exits_2(workdir, capsys):
    assert run("reconstruct", "nope.csv") == 2
    capsys.readouterr()


def test_unknown_flag_rejected(workdir):
    with pytest.raises(SystemExit) as exc:
        run("simulate", "--frobnicate")
    assert exc.value.code == 2


def test_config_file_with_flag_override(workdir):
    with open("sim.cfg", "w") as fh:
        fh.write("two_j = 20\naxes = 6\nshots = 20\nseed = 9\nout = from_cfg.csv\n")
    assert run("simulate", "--config", "sim.cfg") == 0
    assert os.path.exists("from_cfg.csv")
    recs = stio.parse_measurements("from_cfg.csv")
    assert len(recs) == 120
    # flags beat the file
    assert run("simulate", "--config", "sim.cfg", "--shots", "5",
               "--out", "override.csv") == 0
    assert len(stio.parse_measurements("override.csv")) == 30


def test_config_boolean_values(workdir, capsys):
    run("simulate", "--two-j", "20", "--axes", "6", "--shots", "10", "--seed", "1",
        "--out", "m.csv")
    with open("r.cfg", "w") as fh:
        fh.write("fold_north = false\n")
    assert run("reconstruct", "m.csv", "--config", "r.cfg", "--out", "r") == 0
    assert "fold_north=False" in capsys.readouterr().out
    with open("bad.cfg", "w") as fh:
        fh.write("fold_north = maybe\n")
    assert run("reconstruct", "m.csv", "--config", "bad.cfg", "--out", "r2") == 2


def test_simulate_sphere_layout_and_full_sphere_reconstruction(workdir):
    assert run("simulate", "--state", "coherent", "--two-j", "20", "--theta0", "0.5",
               "--axis-sphere", "--axes", "40", "--shots", "30", "--seed", "3",
               "--out", "sph.csv") == 0
    assert run("reconstruct", "sph.csv", "--mode", "full-sphere", "--kmax", "8",
               "--out", "sph") == 0
    state = stio.read_coefficients("sph_coeffs.csv")
    assert state.kmax == 8
    assert state.coeff(0, 0).real == pytest.approx(1.0 / math.sqrt(21.0), rel=1e-9)


def test_simulate_phase_noise_flag(workdir):
    assert run("simulate", "--two-j", "20", "--axes", "6", "--shots", "10",
               "--seed", "1", "--phase-noise", "model:0.14",
               "--phase-variant", "quadratic", "--out", "pn.csv") == 0
    assert run("simulate", "--two-j", "20", "--axes", "6", "--shots", "10",
               "--seed", "1", "--phase-noise", "junk", "--out", "x.csv") == 2


def test_selftest_passes(workdir, capsys):
    assert run("selftest") == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 7
    assert "FAIL" not in out
