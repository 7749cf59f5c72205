import csv
import json

import numpy as np
import pytest

from amplituder.cli import EXIT_FAIL, EXIT_PASS, EXIT_PRECONDITION, run
from amplituder.problem import ParseError, ValidationError, bundled_configs, parse_problem, parse_text, serialize
from amplituder.solver import gaussian

from conftest import cel_symbol, cubic_first_component, cubic_scalar, swift_hohenberg_symbol

UNSTABLE = """
# first component is Swift-Hohenberg, second grows at long wavelengths
[problem]
name = unstable
d = 1
m = 2

[symbol]
4  1 1  -1 0
2  1 1  -2 0
0  1 1  -1 0
0  2 2  0.1 0
2  2 2  1 0

[nonlinearity]
3 0  1  -1

[critical]
k = 1

[error]
epsilons = 0.04, 0.01, 0.0025
points = 64
"""


def write(tmp_path, text, name="p.prob"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# parsing -------------------------------------------------------------------


def test_bundled_configs_listed():
    assert bundled_configs() == ["chen_ei_lin", "oscillatory", "swift_hohenberg"]


def test_bundled_swift_hohenberg():
    p = parse_problem("swift_hohenberg")
    assert (p.d, p.m, p.k) == (1, 1, (1.0,))
    assert p.symbol == swift_hohenberg_symbol()
    assert p.nonlinearity == cubic_scalar()


def test_bundled_chen_ei_lin():
    p = parse_problem("chen_ei_lin")
    assert (p.d, p.m, p.D) == (2, 2, 1)
    assert p.symbol == cel_symbol(0.25, 0.75)
    assert p.nonlinearity == cubic_first_component()


def test_bundled_oscillatory():
    p = parse_problem("oscillatory")
    assert p.omega == 1.0 and p.k == (0.0,)


@pytest.mark.parametrize("name", ["swift_hohenberg", "chen_ei_lin", "oscillatory"])
def test_round_trip(name):
    p = parse_problem(name)
    q = parse_text(serialize(p))
    assert q == p
    assert serialize(q) == serialize(p)


def test_empty_file():
    with pytest.raises(ParseError):
        parse_text("")
    with pytest.raises(ParseError):
        parse_text("# only a comment\n\n")


def test_experiment_defaults():
    p = parse_problem("swift_hohenberg")
    assert p.option("error", "epsilons") == (0.04, 0.01, 0.0025)
    assert p.option("error", "r") == 0
    assert p.option("scaled", "profile") is not None
    assert p.analysis_kwargs["j_max"] == 16


def test_overrides():
    p = parse_problem("swift_hohenberg", ["error.points=256", "critical.j_max = 5"])
    assert p.option("error", "points") == (256,)
    assert p.analysis_kwargs["j_max"] == 5
    for bad in ("symbol.x=1", "nosuch.x=1", "justtext"):
        with pytest.raises(ParseError):
            parse_problem("swift_hohenberg", [bad])
    with pytest.raises(ParseError):
        parse_problem("swift_hohenberg", ["error.bogus=1"])


@pytest.mark.parametrize(
    "mutation, exc, line",
    [
        (("k = 1", "k = 1, 2"), ValidationError, 16),
        (("3  1  -1", "3  1"), ParseError, 14),
        (("3  1  -1", "3  2  -1"), ValidationError, 14),
        (("0  1 1  -1 0", "0  1 2  -1 0"), ValidationError, 10),
        (("[critical]", "[critcal]"), ParseError, 15),
        (("d = 1", "d = one"), ParseError, 3),
        (("k = 1", "k = 0"), ValidationError, 16),
    ],
)
def test_parse_errors_carry_line_numbers(mutation, exc, line):
    text = """[problem]
name = t
d = 1
m = 1

[symbol]
# comment
4  1 1  -1 0
2  1 1  -2 0
0  1 1  -1 0

[nonlinearity]
1  1   1
3  1  -1
[critical]
k = 1
"""
    with pytest.raises(exc) as err:
        parse_text(text.replace(*mutation, 1))
    assert err.value.line == line


def test_negative_epsilon_rejected():
    with pytest.raises(ValidationError):
        parse_problem("swift_hohenberg", ["error.epsilons=0.1, -0.01, 0.001"])


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        parse_problem("/nonexistent/problem.prob")


# commands ------------------------------------------------------------------


def load(path):
    return json.loads(path.read_text())


def test_analyze_and_derive_sh(tmp_path):
    assert run(["analyze", "--problem", "swift_hohenberg", "--outdir", str(tmp_path)]) == EXIT_PASS
    assert run(["derive", "--problem", "swift_hohenberg", "--outdir", str(tmp_path)]) == EXIT_PASS
    rep = load(tmp_path / "derive.report")
    text = json.dumps(rep)
    assert "A_1 - 3*A_1^2*A_2" in text
    assert "A_1 - 3*A_1^3" in text
    assert rep["pass"]


def test_derive_cel(tmp_path):
    assert run(["derive", "--problem", "chen_ei_lin", "--outdir", str(tmp_path)]) == EXIT_PASS
    text = (tmp_path / "derive.report").read_text()
    assert "1.33333333333" in text
    assert "-0.1666666666" in text


def test_all_bundled_analyze_and_derive(tmp_path):
    for name in bundled_configs():
        for cmd in ("analyze", "derive"):
            assert run([cmd, "--problem", name, "--outdir", str(tmp_path / name)]) == EXIT_PASS


def test_verify_error_refuses_unstable_problem(tmp_path):
    path = write(tmp_path, UNSTABLE)
    assert run(["analyze", "--problem", path, "--outdir", str(tmp_path)]) == EXIT_PRECONDITION
    assert run(["verify-error", "--problem", path, "--outdir", str(tmp_path)]) == EXIT_PRECONDITION
    assert load(tmp_path / "verify-error.report")["pass"] is False


def test_parse_error_exit_code(tmp_path, capsys):
    path = write(tmp_path, "")
    assert run(["analyze", "--problem", path, "--outdir", str(tmp_path)]) == EXIT_FAIL
    assert "empty" in capsys.readouterr().err


def test_steady_command(tmp_path):
    assert run(["steady", "--problem", "swift_hohenberg", "--outdir", str(tmp_path)]) == EXIT_PASS
    with open(tmp_path / "steady.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4
    phis = sorted(float(r[1]) for r in rows[1:])
    np.testing.assert_allclose(phis, [-1 / np.sqrt(3), 0.0, 1 / np.sqrt(3)], atol=1e-12)


def test_simulate_command_outputs(tmp_path):
    args = ["simulate", "--problem", "swift_hohenberg", "--outdir", str(tmp_path),
            "--override", "simulate.points=128", "--override", "simulate.epsilon=0.05"]
    assert run(args) == EXIT_PASS
    for name in ("simulate_summary.csv", "simulate_full.csv", "simulate_amplitude.csv"):
        assert (tmp_path / name).stat().st_size > 0
    with open(tmp_path / "simulate_amplitude.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["time", "component", "index", "re", "im"]


def test_csv_determinism(tmp_path):
    outs = []
    for run_id in ("a", "b"):
        d = tmp_path / run_id
        args = ["verify-error", "--problem", "swift_hohenberg", "--outdir", str(d),
                "--override", "error.points=128", "--override", "error.epsilons=0.1, 0.03, 0.01"]
        run(args)
        run(["verify-scaled", "--problem", "swift_hohenberg", "--outdir", str(d),
             "--override", "scaled.points=1024", "--override", "scaled.n_periods=4"])
        outs.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    assert outs[0] and outs[0] == outs[1]


def test_csv_precision(tmp_path):
    run(["verify-scaled", "--problem", "swift_hohenberg", "--outdir", str(tmp_path),
         "--override", "scaled.points=1024", "--override", "scaled.n_periods=4"])
    with open(tmp_path / "verify-scaled.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    for row in rows:
        for cell in row:
            assert float(repr(float(cell))) == float(cell)
    assert any(len(c.replace("-", "").replace(".", "").split("e")[0]) >= 15 for r in rows for c in r)


def test_profile_count_mismatch(tmp_path):
    args = ["simulate", "--problem", "swift_hohenberg", "--outdir", str(tmp_path),
            "--override", f"simulate.profiles={gaussian(1, 1)}; {gaussian(1, 2)}", "--override", "simulate.points=64"]
    assert run(args) == EXIT_FAIL
