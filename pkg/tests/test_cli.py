import json
import subprocess
import sys

import numpy as np
import pytest

from fracnls.cli import (
    EXIT_IO, EXIT_OK, EXIT_VALIDATION, ValidationError, main, parse_args, read_profile,
    write_profile,
)
from fracnls.grid import Grid
from fracnls.solvers import residual_norm, solve_traveling_profile


@pytest.fixture(scope="module")
def profile():
    return solve_traveling_profile(0.75, 1.0, Grid(40 * np.pi, 2048))


def test_parse_soliton_example():
    cfg = parse_args(["soliton", "--sigma", "0.75", "--omega", "1", "--n", "2048", "--box", "125.6"])
    assert (cfg.command, cfg.sigma, cfg.omega, cfg.n, cfg.box) == ("soliton", 0.75, 1.0, 2048, 125.6)


def test_sigma_out_of_range(capsys):
    with pytest.raises(ValidationError, match=r"sigma must lie in \(0.5, 1\]"):
        parse_args(["soliton", "--sigma", "0.4"])
    assert main(["soliton", "--sigma", "0.4"]) == EXIT_VALIDATION
    assert "sigma must lie in (0.5, 1]" in capsys.readouterr().err


def test_unknown_flag_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        parse_args(["soliton", "--bogus", "1"])
    assert exc.value.code != 0


def test_config_override(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"sigma": 0.6, "omega": 2.0, "grid": [50.0, 1024], "out": "x.json"}))
    cfg = parse_args(["soliton", "--config", str(path), "--sigma", "0.9"])
    assert cfg.sigma == 0.9 and cfg.omega == 2.0 and cfg.box == 50.0 and cfg.n == 1024
    assert cfg.output_path == "x.json"
    path.write_text(json.dumps({"sigma": 0.6, "colour": 1}))
    with pytest.raises(ValidationError, match="unknown config key"):
        parse_args(["soliton", "--config", str(path)])


@pytest.mark.parametrize("argv", [["soliton", "--sigma", "0.75", "--n", "1000"],
                                  ["soliton", "--sigma", "0.75", "--omega", "-1"],
                                  ["soliton"],
                                  ["evolve", "--sigma", "0.75", "--dt", "0.3"],
                                  ["rescale", "--sigma", "0.75", "--k", "0"]])
def test_validation_failures(argv):
    with pytest.raises(ValidationError):
        parse_args(argv)


def test_json_roundtrip_is_bit_exact(profile, tmp_path):
    path = tmp_path / "q.json"
    write_profile(profile, str(path), "json")
    back = read_profile(str(path))
    assert np.array_equal(back.values, profile.values)
    assert back.grid == profile.grid
    assert (back.sigma, back.omega, back.k, back.residual, back.method) == (
        profile.sigma, profile.omega, profile.k, profile.residual, profile.method)


def test_csv_roundtrip(profile, tmp_path):
    path = tmp_path / "q.csv"
    write_profile(profile, str(path), "csv")
    lines = path.read_text().splitlines()
    assert lines[1] == "x,re,im"
    assert len(lines) - 2 == profile.grid.N
    back = read_profile(str(path))
    assert np.max(np.abs(back.values - profile.values)) <= 1e-15 * np.max(np.abs(profile.values))
    assert abs(residual_norm(back) - profile.residual) <= 1e-12


def test_outputs_are_byte_identical(tmp_path):
    for i in (1, 2):
        assert main(["soliton", "--sigma", "0.75", "--out", str(tmp_path / f"s{i}.json")]) == EXIT_OK
    assert (tmp_path / "s1.json").read_bytes() == (tmp_path / "s2.json").read_bytes()


def test_rescale_command(tmp_path):
    src = tmp_path / "q1.json"
    dst = tmp_path / "q2.json"
    assert main(["soliton", "--sigma", "0.75", "--out", str(src)]) == EXIT_OK
    assert main(["rescale", "--in", str(src), "--k", "2", "--out", str(dst)]) == EXIT_OK
    q2 = read_profile(str(dst))
    assert q2.k == 2.0 and q2.residual <= 1e-7


def test_gradient_flow_soliton(tmp_path):
    out = tmp_path / "gf.json"
    assert main(["soliton", "--sigma", "0.75", "--method", "gradient_flow", "--out", str(out)]) == EXIT_OK
    p = read_profile(str(out))
    assert p.method == "gradient_flow" and p.meta["theta"] == 0.95


def test_symbol_table(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["symbol-table", "--sigma", "0.75", "--k", "1", "--n", "256", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "xi,p_k,dp_k,d2p_k,g,E"
    assert len(lines) == 257
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.all(rows[:, 1] >= 0)
    assert np.all(rows[:, 3] >= 0)


def test_evolve_command(tmp_path):
    out = tmp_path / "traj.csv"
    argv = ["evolve", "--sigma", "0.75", "--k", "1", "--n", "4096", "--t-final", "0.2", "--out", str(out)]
    assert main(argv) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "t,mass,energy,momentum,center,shape_error"
    assert lines[-1].startswith("# center_velocity=")
    v = float(lines[-1].split()[1].split("=")[1])
    assert v == pytest.approx(1.5, rel=1e-3)


def test_evolve_refines_default_grid(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["evolve", "--sigma", "0.75", "--k", "1", "--t-final", "0.05", "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("t,mass")


def test_explicit_coarse_grid_is_rejected(tmp_path):
    argv = ["evolve", "--sigma", "0.75", "--k", "1", "--n", "2048", "--t-final", "0.05",
            "--out", str(tmp_path / "t.csv")]
    assert main(argv) == EXIT_VALIDATION


@pytest.mark.parametrize("suffix,first", [(".csv", "#"), (".json", "{")])
def test_format_follows_suffix(profile, tmp_path, suffix, first):
    src = tmp_path / "q.json"
    write_profile(profile, str(src), "json")
    out = tmp_path / ("q2" + suffix)
    assert main(["rescale", "--in", str(src), "--k", "2", "--out", str(out)]) == EXIT_OK
    assert out.read_text()[0] == first


def test_check_command(tmp_path):
    out = tmp_path / "chk.json"
    assert main(["check", "--sigma", "0.75", "--trials", "20", "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["ok"] and rep["reports"][0]["violations"] == []


def test_check_fails_on_small_box(tmp_path):
    out = tmp_path / "chk.json"
    code = main(["check", "--sigma", "0.6", "--box", str(40 * np.pi), "--n", "2048", "--trials", "5",
                 "--out", str(out)])
    assert code == EXIT_VALIDATION
    assert "Pohozaev" in json.loads(out.read_text())["reports"][0]["violations"][0]


def test_io_error_exit():
    assert main(["soliton", "--sigma", "0.75", "--out", "/nonexistent/dir/q.json"]) == EXIT_IO
    assert main(["rescale", "--in", "/nonexistent/q.json", "--k", "2"]) == EXIT_IO


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "fracnls", "soliton", "--sigma", "0.3"],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_VALIDATION
