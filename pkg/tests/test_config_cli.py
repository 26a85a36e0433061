import filecmp

import numpy as np
import pytest

from rwlab.cli import _default_threads, main
from rwlab.config import (Config, ConfigError, apply_overrides,
                          build_geometry, build_grid, build_param,
                          build_solve_config, build_weight_profile,
                          load_config, parse_config_text, sorted_pairs)
from rwlab.field import read_rwf1

BASE_SOLVE = """
# two-media reduced-wave solve, interface far outside the box
grid.dim = 2
grid.extent = 6.0
grid.nodes = 33
geometry.kind = ball
geometry.mu1 = 1.0
geometry.mu2 = 2.0
geometry.radius = 1000.0
spectral.lambda = 1.0
spectral.eta = 0.5
solver.method = direct
source.kind = gaussian
delta = 1.0
"""

STRIP = """
grid.dim = 2
grid.extent = 6.0
grid.nodes = 33
geometry.kind = cylinder
geometry.radius = 1.0
geometry.axis = 2
geometry.mu1 = 1.0
geometry.mu2 = 2.0
spectral.lambda = 1.0
solver.method = direct
source.kind = gaussian
delta = 1.0
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- config grammar ---


def test_parse_grammar():
    cfg = parse_config_text(
        "a.b = 1.5   # trailing comment\n"
        "\n"
        "# full comment line\n"
        "flag = yes\n"
        "name=  spaced value  \n")
    assert cfg.get_float("a.b") == 1.5
    assert cfg.get_bool("flag") is True
    assert cfg.get_str("name") == "spaced value"
    assert "a.b" in cfg and "missing" not in cfg


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("a = 1\nno equals sign here\n")
    with pytest.raises(ConfigError, match="line 3"):
        parse_config_text("a = 1\n\nBad.Key = 2\n")
    with pytest.raises(ConfigError):
        Config().set("1starts_with_digit", "x")


def test_typed_getters():
    cfg = parse_config_text(
        "f = 2.5\ni = 7\nb = off\nlist = 1, 2 3\nbadf = soup\n")
    assert cfg.get_float("f") == 2.5
    assert cfg.get_int("i") == 7
    assert cfg.get_bool("b") is False
    assert cfg.get_floats("list") == [1.0, 2.0, 3.0]
    assert cfg.get_float("gone", 9.0) == 9.0
    assert cfg.get_floats("gone", [1.0]) == [1.0]
    with pytest.raises(ConfigError, match="missing key"):
        cfg.get_float("gone")
    with pytest.raises(ConfigError, match="not a number"):
        cfg.get_float("badf")
    with pytest.raises(ConfigError, match="not an integer"):
        cfg.get_int("f")
    with pytest.raises(ConfigError, match="not a boolean"):
        cfg.get_bool("f")


def test_overrides():
    cfg = parse_config_text("a = 1\n")
    apply_overrides(cfg, ["a=2", "b.c=3"])
    assert cfg.get_int("a") == 2 and cfg.get_int("b.c") == 3
    with pytest.raises(ConfigError, match="expected key=value"):
        apply_overrides(cfg, ["broken"])
    assert sorted_pairs(cfg) == [("a", "2"), ("b.c", "3")]


def test_builders():
    cfg = parse_config_text(BASE_SOLVE)
    grid = build_grid(cfg)
    assert (grid.dim, grid.L, grid.n) == (2, 6.0, 33)
    geom = build_geometry(cfg)
    assert geom.kind == "ball" and geom.radius == 1000.0
    p = build_param(cfg)
    assert p.z == complex(1.0, 0.5)
    scfg = build_solve_config(cfg)
    assert scfg.method == "direct"
    cfg.set("weight.kind", "truncated")
    cfg.set("weight.r0", "2.0")
    assert build_weight_profile(cfg).kind == "truncated"


def test_builder_errors():
    cfg = parse_config_text(BASE_SOLVE)
    cfg.set("geometry.kind", "moebius")
    with pytest.raises(ConfigError, match="geometry.kind"):
        build_geometry(cfg)
    cfg2 = parse_config_text(BASE_SOLVE)
    cfg2.set("spectral.half_plane", "sideways")
    with pytest.raises(ConfigError, match="half_plane"):
        build_param(cfg2)
    cfg3 = parse_config_text(BASE_SOLVE)
    cfg3.set("solver.closure", "robin")
    with pytest.raises(ConfigError, match="closure"):
        build_solve_config(cfg3)
    cfg3.set("solver.closure", "dirichlet")
    cfg3.set("weight.kind", "bogus")
    with pytest.raises(ConfigError, match="weight.kind"):
        build_weight_profile(cfg3)


# --- CLI plumbing ---


def test_default_threads(monkeypatch):
    monkeypatch.delenv("RWLAB_THREADS", raising=False)
    assert _default_threads() == 1
    monkeypatch.setenv("RWLAB_THREADS", "8")
    assert _default_threads() == 8
    monkeypatch.setenv("RWLAB_THREADS", "zero")
    assert _default_threads() == 1
    monkeypatch.setenv("RWLAB_THREADS", "0")
    assert _default_threads() == 1


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["not-an-experiment", "--config", "x"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["solve"])           # --config is required
    assert exc.value.code == 64

    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 64

    bad = write_cfg(tmp_path, "what is this\n", "bad.cfg")
    assert main(["solve", "--config", bad]) == 64
    assert "config error" in capsys.readouterr().err

    good = write_cfg(tmp_path, BASE_SOLVE)
    assert main(["solve", "--config", good, "--threads", "0"]) == 64
    assert main(["solve", "--config", good, "--override", "oops"]) == 64


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solve_experiment_outputs(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE_SOLVE)
    out = tmp_path / "out"
    code = main(["solve", "--config", cfg, "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out.strip().endswith("COMPLETED")

    manifest = (out / "manifest.txt").read_text().splitlines()
    assert manifest[0] == "experiment=solve"
    assert manifest[1].startswith("version=")
    keys = [line.split("=", 1)[0] for line in manifest[2:]]
    assert keys == sorted(keys)

    rows = (out / "rows.csv").read_text().splitlines()
    assert rows[0].startswith("half_plane,lambda,eta,norm_minus_delta")
    assert len(rows) == 2

    u = read_rwf1(out / "solution.rwf1")
    assert u.grid.n == 33 and np.any(u.values != 0)
    assert (out / "verdict.txt").read_text().splitlines()[0] == \
        "verdict=COMPLETED"
    assert (out / "solver_stats.csv").exists()


def test_check_geometry_pass_and_fail(tmp_path, capsys):
    cfg = write_cfg(tmp_path, STRIP)
    out = tmp_path / "geo"
    assert main(["check-geometry", "--config", cfg, "--out", str(out)]) == 0
    assert "min_product=1" in capsys.readouterr().out
    assert (out / "verdict.txt").read_text().startswith("verdict=PASS")

    cfg2 = write_cfg(tmp_path, BASE_SOLVE, "inv.cfg")
    code = main(["check-geometry", "--config", cfg2,
                 "--out", str(tmp_path / "geo2"),
                 "--override", "geometry.radius=1.0",
                 "--override", "geometry.invert=true"])
    assert code == 2
    assert "min_product=-1" in capsys.readouterr().out


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solver_failure_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE_SOLVE)
    code = main(["solve", "--config", cfg, "--out", str(tmp_path / "f"),
                 "--override", "solver.method=iterative",
                 "--override", "solver.max_iterations=1"])
    assert code == 3
    assert capsys.readouterr().out.strip().endswith("SOLVER-FAILURE")
    verdict = (tmp_path / "f" / "verdict.txt").read_text()
    assert verdict.startswith("verdict=SOLVER-FAILURE")


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_verify_identity_cli(tmp_path, capsys):
    text = BASE_SOLVE + (
        "grid.nodes = 97\n"
        "identity.r_in = 0.5\n"
        "identity.r_out = 5.0\n"
        "identity.alpha = one\n"
        "identity.field = manufactured\n"
        "weight.kinds = truncated power_delta\n"
        "weight.r0 = 2.75\n")
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "ident"
    assert main(["verify-identity", "--config", cfg, "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip().endswith("PASS")
    rows = (out / "rows.csv").read_text().splitlines()
    assert rows[0].split(",")[:3] == ["profile", "lhs1", "lhs2"]
    assert len(rows) == 3
    assert rows[1].split(",")[0] == "truncated"
    assert rows[2].split(",")[0] == "power_delta"


def test_radiation_probe_cli(tmp_path, capsys):
    text = """
grid.dim = 3
grid.extent = 8.0
grid.nodes = 49
geometry.kind = ball
geometry.mu1 = 1.0
geometry.mu2 = 2.0
geometry.radius = 1000.0
spectral.lambda = 1.0
probe.radii = 2.0 3.0
probe.mode = plus
probe.field = analytic
source.kind = spherical_wave
source.k = 1.0
"""
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "probe"
    assert main(["radiation-probe", "--config", cfg, "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip().endswith("COMPLETED")
    rows = (out / "rows.csv").read_text().splitlines()
    assert len(rows) == 3
    assert rows[0].startswith("radius,decay_value")


SWEEP = BASE_SOLVE + (
    "spectral.eta_ladder = 1.0 0.5 0.25 0.125 0.0625 0.03125 0.015625"
    " 0.0078125 0.00390625 0.001953125 0.0009765625\n"
    "solver.method = iterative\n"
    "solver.tolerance = 1e-8\n"
    "solver.max_iterations = 200\n")


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_sweep_eta_pass_and_forced_fail(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SWEEP)
    out = tmp_path / "sweep"
    assert main(["sweep-eta", "--config", cfg, "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip().endswith("PASS")
    rows = (out / "rows.csv").read_text().splitlines()
    assert len(rows) == 12
    assert rows[0].split(",")[7] == "cauchy_distance"
    assert rows[1].split(",")[7] == ""      # first rung has no predecessor

    code = main(["sweep-eta", "--config", cfg, "--out", str(tmp_path / "s2"),
                 "--override", "thresholds.cauchy_shrink=1e-12"])
    assert code == 2
    assert capsys.readouterr().out.strip().endswith("FAIL")


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_outputs_byte_identical_across_threads(tmp_path):
    cfg = write_cfg(tmp_path, SWEEP)
    out1, out8 = tmp_path / "t1", tmp_path / "t8"
    assert main(["sweep-eta", "--config", cfg, "--out", str(out1),
                 "--threads", "1"]) == 0
    assert main(["sweep-eta", "--config", cfg, "--out", str(out8),
                 "--threads", "8"]) == 0
    for name in ("manifest.txt", "rows.csv", "solution.rwf1", "verdict.txt"):
        assert filecmp.cmp(out1 / name, out8 / name, shallow=False), name


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_scan_resolvent_conjugate_halves(tmp_path, capsys):
    text = STRIP + (
        "spectral.lambda_values = 1.0\n"
        "spectral.eta_values = 0.5 0.25 0.125 0.0625\n")
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "scan"
    code = main(["scan-resolvent", "--config", cfg, "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out.strip().endswith("PASS")
    rows = [line.split(",") for line in
            (out / "rows.csv").read_text().splitlines()[1:]]
    assert [r[0] for r in rows] == ["plus"] * 4 + ["minus"] * 4
    # the two real-axis approaches are complex conjugates: every real norm
    # column must agree between the half-planes
    for i in range(4):
        for col in (3, 4, 5, 6):
            a, b = float(rows[i][col]), float(rows[i + 4][col])
            assert a == pytest.approx(b, rel=1e-10)
