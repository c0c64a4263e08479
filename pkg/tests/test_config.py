from fractions import Fraction

import pytest

from poisson_chaos.config import ExperimentSpec, parse_config, parse_expression
from poisson_chaos.errors import ConfigError
from poisson_chaos.functions import Bump, Indicator, coordinate
from poisson_chaos.measures import FiniteDiscrete, GammaLevy
from poisson_chaos.window import Window

FULL = """\
# a full example
suite = laplace-check
window = [0, 2]
density = 1 + x/4
levy = gamma          # truncated below
epsilon = 1/1000
quadrature_order = 48
seed = 20261018
samples = 100000
threads = 2
T = 2.5
c = -3/10
phi = log1p(x**2/5 - 0.1) + exp(-x)
psi = -x
functions = 0.2*x - 1/10; indicator(0.5, 1.5, 0.35); bump(1, 0.6, 0.4)
eta = 1/2*x - 2/5
out = report.json
format = csv
"""


def test_full_parse_and_round_trip():
    spec = parse_config(FULL)
    assert spec.window == Window.interval(0, 2)
    assert spec.levy_measure() == GammaLevy(1e-3)
    assert spec.epsilon == Fraction(1, 1000)
    assert spec.functions[1] == Indicator(0.5, 1.5, 0.35)
    assert spec.functions[2] == Bump(1, 0.6, 0.4)
    assert spec.intensity().order == 48
    assert spec.intensity().mass == pytest.approx(2.5)
    text = spec.to_text()
    again = parse_config(text)
    assert again == spec
    assert again.to_text() == text


def test_levy_variants():
    assert parse_config("levy = poisson\n").levy_measure() == FiniteDiscrete.unit()
    assert parse_config("levy = telegraph\n").levy_measure() == FiniteDiscrete.telegraph()
    d = parse_config("levy = discrete(-1:0.25, 2:1/2)\n").levy_measure()
    assert d == FiniteDiscrete(((-1.0, 0.25), (2.0, 0.5)))
    assert parse_config(f"levy = {d}\n").levy_measure() == d


def test_two_dimensional_expressions():
    spec = parse_config("window = [0, 1] x [0, 1]\nphi = x*y + indicator((0, 0), (1/2, 1/2), 2)\n")
    assert spec.phi.dim == 2
    assert parse_config(spec.to_text()) == spec


def test_exact_numbers_stay_exact():
    f = parse_expression("1/3*x + 2")
    assert f.is_exact
    assert not parse_expression("0.5*x").is_exact


@pytest.mark.parametrize("text, line, column, fragment", [
    ("suite = nope\n", 1, 9, "unknown suite"),
    ("\n\nwindow = [0, 2]\nphi = x + z\n", 4, 11, "unknown name"),
    ("samples = -3\n", 1, 11, "non-negative integer"),
    ("  foo = 1\n", 1, 3, "unknown key"),
    ("phi = x**y\n", 1, 10, "exponent"),
    ("phi = (x\n", 1, 7, "syntax error"),
    ("seed = 1\nseed = 2\n", 2, 1, "duplicate"),
    ("window = [0, 2\n", 1, 10, "window"),
    ("epsilon = 2\n", 1, 11, "epsilon"),
    ("levy = cauchy\n", 1, 8, "unknown levy"),
    ("window = [0, 2]\ndensity = x - 1\n", 2, 11, "positive"),
    ("functions = x; ; x\n", 1, 15, "empty item"),
    ("just text\n", 1, 1, "key = value"),
    ("phi = x / x\n", 1, 11, "division"),
])
def test_errors_carry_line_and_column(text, line, column, fragment):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert (e.value.line, e.value.column) == (line, column)
    assert fragment in str(e.value)
    assert str(e.value).startswith(f"line {line}, column {column}: ")


def test_empty_config_is_empty_spec():
    assert parse_config("# nothing\n\n") == ExperimentSpec()
