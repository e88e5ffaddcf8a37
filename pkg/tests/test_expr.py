import math

import numpy as np
import pytest

from varfrac.expr import Expression, ExpressionError


@pytest.mark.parametrize("text, expected", [
    ("1 + 2*3", 7.0),
    ("2^3", 8.0),
    ("2**-1", 0.5),
    ("-abs(-4) + max(1, 2, 3)", -1.0),
    ("min(2, 1) + cos(0) + exp(0) + sin(pi/2)", 4.0),
])
def test_values(text, expected):
    assert Expression(text, ())() == pytest.approx(expected)


def test_elementwise_on_arrays():
    e = Expression("2 + 0.5*abs(sin(x + y))", ("x", "y"))
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(e(x=x, y=x), 2 + 0.5 * np.abs(np.sin(2 * x)))


@pytest.mark.parametrize("text", [
    "__import__('os')",
    "x.real",
    "[1, 2]",
    "lambda: 1",
    "open('f')",
    "x if x else 1",
    "'a'",
    "True + 1",
    "y",
    "2 % 3",
    "sin(x=1)",
    "(1",
])
def test_rejected(text):
    with pytest.raises(ExpressionError):
        Expression(text, ("x",))


def test_missing_variable():
    with pytest.raises(ExpressionError, match="missing"):
        Expression("x + 1", ("x",))()


def test_min_needs_two_arguments():
    with pytest.raises(ExpressionError):
        Expression("min(1)", ())()


def test_pi_constant():
    assert Expression("pi", ())() == math.pi
