import io
import json
import math

import numpy as np
import pytest

from ssextinction import cli
from ssextinction.cli import EXIT_NUMERIC, EXIT_OK, EXIT_PRECONDITION, emit_table, parse_grid, parse_table, run

STABLE = "kind=stable_example, a=1.5, rho=0.4, b=0.6"


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_emit_parse_round_trip():
    cols = ["t", "value", "tag"]
    rows = [(0.1, 1 / 3, "a"), (2.0, math.pi, "b")]
    back_cols, back = parse_table(emit_table(cols, rows))
    assert back_cols == cols
    for r, b in zip(rows, back):
        assert b[0] == r[0] and b[1] == r[1] and b[2] == r[2]  # 17 digits round-trip exactly


def test_json_output_is_valid():
    text = emit_table(["x", "y"], [(1.0, float("inf"))], "json")
    assert json.loads(text) == [{"x": 1.0, "y": "inf"}]


def test_parse_grid_forms():
    assert np.allclose(parse_grid("1:3:3"), [1, 2, 3])
    assert np.allclose(parse_grid("1:100:3:log"), [1, 10, 100])
    assert np.allclose(parse_grid("0.5,-0.25"), [0.5, -0.25])
    assert parse_grid("2:2:1").tolist() == [2.0]
    for bad in ("1:2", "0:1:3:log", "1:2:0", "1:2:3:cubic", ","):
        with pytest.raises(cli.CliError):
            parse_grid(bad)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_frechet_density_matches_closed_form(beta):
    code, text = call("density", "--model", f"kind=identity, time_change_beta={beta}", "--law", "frechet",
                      "--grid", "0.5:10:7")
    assert code == EXIT_OK
    _, rows = parse_table(text)
    for t, dens, method, _ in rows:
        exact = beta * t ** (-beta - 1) * math.exp(-(t ** -beta))
        assert abs(dens - exact) <= 1e-8
        assert method == ("series" if t ** -beta <= 2 else "mellin_barnes")


def test_mellin_barnes_method_flag():
    code, text = call("density", "--model", "kind=identity", "--law", "frechet", "--grid", "1.5",
                      "--method", "mellin_barnes")
    assert code == EXIT_OK
    _, rows = parse_table(text)
    assert rows[0][2] == "mellin_barnes"
    assert rows[0][1] == pytest.approx(1.5**-2 * math.exp(-1 / 1.5), abs=1e-8)


def test_frechet_tail_plateau():
    code, text = call("tail", "--model", "kind=affine, c=1, b=1", "--law", "frechet", "--grid", "1e3,1e4")
    assert code == EXIT_OK
    _, rows = parse_table(text)
    for t, surv, plateau, limit in rows:
        assert limit == pytest.approx(0.5)
        assert plateau == pytest.approx(limit, rel=1e-2)


def test_mellin_command_at_zero():
    code, text = call("mellin", "--model", STABLE, "--law", "T", "--grid", "0")
    assert code == EXIT_OK
    _, rows = parse_table(text)
    assert rows[0][2] == pytest.approx(1.0, abs=1e-10)


def test_output_file(tmp_path):
    dest = tmp_path / "out.csv"
    code, text = call("phi", "--model", "kind=identity", "--grid", "1,2", "--output", str(dest))
    assert code == EXIT_OK and text == ""
    assert dest.read_text().startswith("u,")


def test_model_file_and_overrides(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("# stable example\nkind=stable_example\na=1.5\nrho=0.4\nb=0.6\n")
    code, _ = call("mellin", "--model", str(path), "--law", "T", "--grid", "0.1", "--x", "2")
    assert code == EXIT_OK
    code, _ = call("mellin", "--model", str(path), "--alpha", "0.5", "--grid", "0.1")
    assert code == EXIT_PRECONDITION


@pytest.mark.parametrize(
    "argv",
    [
        ("phi", "--model", "kind=identity, bogus=1"),
        ("phi", "--model", "kind=stable_example, a=1.5, rho=0.4"),
        ("mellin", "--model", "kind=identity", "--law", "T", "--grid", "0.1"),
        ("mellin", "--model", STABLE, "--law", "T", "--grid", "5"),
        ("density", "--model", STABLE, "--law", "T", "--method", "series", "--grid", "1"),
    ],
)
def test_precondition_exit(argv):
    code, _ = call(*argv)
    assert code == EXIT_PRECONDITION


def test_density_not_available_exit(monkeypatch, capsys):
    def refuse(*a, **k):
        raise cli.DensityNotAvailable("smoothness index N = 0.5 <= 1")

    monkeypatch.setattr(cli, "density_mellin_barnes", refuse)
    code, _ = call("density", "--model", STABLE, "--grid", "1")
    assert code == EXIT_PRECONDITION
    assert "density-not-available" in capsys.readouterr().err


def test_numeric_failure_exit(monkeypatch):
    def diverge(*a, **k):
        raise cli.NonConvergenceError("no")

    monkeypatch.setattr(cli, "density_mellin_barnes", diverge)
    code, _ = call("density", "--model", STABLE, "--grid", "1")
    assert code == EXIT_NUMERIC


def test_verify_theorem3_suite():
    code, text = call("verify", "--model", STABLE, "--suite", "theorem3")
    report = json.loads(text)
    assert code == EXIT_OK and report["pass"]
    assert all(c["discrepancy"] <= 1e-8 for c in report["checks"])


def test_verify_wphi_suite():
    code, text = call("verify", "--model", "kind=brownian", "--suite", "wphi")
    assert code == EXIT_OK
    assert json.loads(text)["pass"]


def test_verify_failing_check_exits_one(monkeypatch):
    monkeypatch.setitem(cli.SUITES, "wphi", lambda spec, args: [cli._check("forced", 1.0, 1e-8)])
    code, text = call("verify", "--model", "kind=brownian", "--suite", "wphi")
    assert code == EXIT_NUMERIC
    assert json.loads(text)["pass"] is False


def test_simulate_quick(tmp_path):
    samples = tmp_path / "s.csv"
    code, text = call("simulate", "--model", "kind=brownian", "--law", "T", "--n", "2000", "--seed", "3",
                      "--grid=-0.3,0.2", "--samples", str(samples))
    assert code == EXIT_OK
    _, rows = parse_table(text)
    for z, emp, se, exact, zscore, digest in rows:
        assert abs(zscore) < 5
        assert samples.read_text().startswith(f"# config_hash={digest}")


def test_workers_env_does_not_change_digest(monkeypatch):
    base = ("simulate", "--model", "kind=stable_subordinator, beta=0.5", "--law", "chi", "--n", "500", "--grid", "0.2")
    _, a = call(*base)
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    _, b = call(*base)
    assert a == b
