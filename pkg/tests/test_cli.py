import math
import subprocess
import sys

import numpy as np
import pytest

from pxeig.cli import (ConfigError, load_config, load_result, main, recompute_lambda,
                       reference_lambda1, run_convergence_study, run_solve)
from pxeig.expression import Expression, ExpressionError, parse_exponent
from pxeig.mesh import DomainSpec

FIGURE_FORMULAS = {
    "5 + 3*sin(3*pi*x)": lambda x, y: 5 + 3 * np.sin(3 * np.pi * x),
    "11 + 9*sin(2*pi*x)": lambda x, y: 11 + 9 * np.sin(2 * np.pi * x),
    "4 + 2*sin(2*pi*x)": lambda x, y: 4 + 2 * np.sin(2 * np.pi * x),
    "28 + 26*cos(2*pi*x)": lambda x, y: 28 + 26 * np.cos(2 * np.pi * x),
    "2 + 2*x^2": lambda x, y: 2 + 2 * x ** 2,
    "2 + x": lambda x, y: 2 + x,
    "3 - (x*y)/2 + -cos(y)^2": lambda x, y: 3 - (x * y) / 2 + -np.cos(y) ** 2,
}


@pytest.mark.parametrize("text", sorted(FIGURE_FORMULAS))
def test_parser_matches_reference(text, rng):
    pts = rng.uniform(-1, 1, size=(100, 2))
    got = Expression(text)(pts)
    want = FIGURE_FORMULAS[text](pts[:, 0], pts[:, 1])
    assert np.max(np.abs(got - want)) <= 1e-14


@pytest.mark.parametrize("bad", ["", "x +", "__import__('os')", "x.real", "exp(x)",
                                 "z + 1", "'2'", "[x]", "x if y else 2", "True + 2"])
def test_parser_rejects(bad):
    with pytest.raises(ExpressionError):
        Expression(bad)


def test_parse_exponent_bounds():
    p = parse_exponent("5 + 3*sin(3*pi*x)", DomainSpec.rectangle())
    assert p.p_minus <= 2.0 and p.p_plus >= 8.0
    assert p.p_minus > 1.99 and p.p_plus < 8.01
    c = parse_exponent("2", DomainSpec.disk())
    assert c.is_constant and c.constant_value == 2.0
    with pytest.raises(ExpressionError):
        parse_exponent("2 - x", DomainSpec.interval(0, 1))  # reaches 1.0
    with pytest.raises(ExpressionError):
        parse_exponent("1/x", DomainSpec.interval(0, 1))


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(None, ["domain=triangle"])
    with pytest.raises(ConfigError):
        load_config(None, ["order=3"])
    with pytest.raises(ConfigError):
        load_config(None, ["bogus=1"])
    with pytest.raises(ConfigError):
        load_config(None, ["h=abc"])
    with pytest.raises(ConfigError):
        load_config(None, ["noequals"])
    with pytest.raises(ConfigError):
        load_config(None, ["exponent=1 + x^2"])
    f = tmp_path / "run.cfg"
    f.write_text("# comment\ndomain = disk\nexponent = 11 + 9*sin(2*pi*x)\n"
                 "h = 0.2\ninner_tol = 1e-9\n")
    cfg = load_config(f, ["order=1"])
    assert cfg.domain.kind == "disk" and cfg.order == 1 and cfg.h == 0.2
    assert cfg.solver.inner_tol == 1e-9


def test_malformed_exponent_exit_code(tmp_path, capsys):
    code = main(["solve", "--out", str(tmp_path), "exponent=2 - x", "domain=interval"])
    assert code == 2
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "summary.txt").exists()


def test_reference_values():
    assert reference_lambda1(DomainSpec.rectangle()) == pytest.approx(math.pi * math.sqrt(2))
    assert reference_lambda1(DomainSpec.disk()) == pytest.approx(2.404826, abs=1e-6)
    assert reference_lambda1(DomainSpec.interval(-1, 1)) == pytest.approx(math.pi / 2)
    assert reference_lambda1(DomainSpec.annulus()) is None


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    cfg = load_config(None, ["domain=rectangle", "exponent=5 + 3*sin(3*pi*x)", "h=0.25",
                             "order=2", f"out={out}", "continuation_steps=4"])
    return cfg, run_solve(cfg)


def test_solve_artifacts(solved):
    cfg, res = solved
    out = cfg.out
    for name in ("eigenfunction.csv", "eigenfunction.vtk", "summary.txt"):
        assert (out / name).exists()
    header = (out / "eigenfunction.csv").read_text().splitlines()[0]
    assert header == "x,y,u"
    summary = dict(line.split("=", 1) for line in (out / "summary.txt").read_text().split("\n")
                   if line)
    assert float(summary["lambda1"]) > 0
    assert float(summary["el_residual"]) <= 1e-6
    assert summary["converged"] == "True"
    assert "center_symmetry_defect" in summary


def test_csv_round_trip(solved):
    cfg, res = solved
    again = load_result(cfg)
    np.testing.assert_array_equal(again.u.coeffs, res.u.coeffs)
    assert recompute_lambda(again) == pytest.approx(again.lambda1, rel=1e-9, abs=1e-9)


def test_diagnose_reuses_output(solved, capsys):
    cfg, _ = solved
    args = ["diagnose", "--out", str(cfg.out), "--h", "0.25", "domain=rectangle",
            "exponent=5 + 3*sin(3*pi*x)"]
    assert main(args) == 0
    assert "center_symmetry_defect=" in capsys.readouterr().out
    assert (cfg.out / "diagnostics.txt").exists()
    # mesh mismatch is reported, not silently accepted
    assert main(args[:3] + ["--h", "0.5"] + args[5:]) == 2


def test_study_p2_square(tmp_path):
    cfg = load_config(None, ["domain=rectangle", "exponent=2", "h=0.5", "order=1",
                             f"out={tmp_path}"])
    rows = run_convergence_study(cfg, 4)
    assert len(rows) == 4
    hs = [r["h"] for r in rows]
    assert all(a > b for a, b in zip(hs, hs[1:]))
    assert rows[-1]["error"] < rows[0]["error"]
    assert math.isnan(rows[0]["order"]) and math.isfinite(rows[-1]["order"])
    lines = (tmp_path / "study.csv").read_text().splitlines()
    assert lines[0].startswith("level,h,n_dofs,lambda1,difference,order")
    assert len(lines) == 5
    with pytest.raises(ConfigError):
        run_convergence_study(cfg, 2)


def test_study_variable_p_warm_start(tmp_path):
    cfg = load_config(None, ["domain=interval", "domain_params=-1,1", "exponent=3 + x^2",
                             "h=0.25", "order=2", f"out={tmp_path}"])
    rows = run_convergence_study(cfg, 3)
    assert "error" not in rows[0]
    assert np.all(np.isfinite([r["lambda1"] for r in rows]))


def test_scan_command(tmp_path, capsys):
    assert main(["scan", "--out", str(tmp_path), "scan_h=0.05",
                 "scan_amplitudes=1,1e-2,1e-4"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3 and out[0].startswith("t=1 ")
    assert (tmp_path / "scan.csv").read_text().startswith("t,mubar,homog\n")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pxeig", "solve", "--out", str(tmp_path),
                           "--h", "0.25", "--order", "1", "exponent=2"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("lambda1=")
