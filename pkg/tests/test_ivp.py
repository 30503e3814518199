import math

import numpy as np
import numpy.testing as npt
import pytest

from equiharmonic.expression import parse
from equiharmonic.grid import Grid
from equiharmonic.ivp import IntegrationOverflow, integrate_linear, integrate_nonlinear
from equiharmonic.newton import second_derivative


def test_initial_values_stored(grid):
    s = integrate_linear(grid.constant(2.0), grid.sample(np.cos), 0.3, -1.2)
    assert s.u.values[0] == 0.3 and s.uprime.values[0] == -1.2


def test_linear_examples(grid):
    s = integrate_linear(grid.zeros(), grid.zeros(), 0.0, 1.0)
    assert abs(s.u.values[-1] - math.pi) <= 1e-10
    s = integrate_linear(grid.constant(1.0), grid.zeros(), 0.0, 1.0)
    assert abs(s.u.values[-1]) <= 1e-8
    npt.assert_allclose(s.u.values, np.sin(grid.x), atol=1e-10)
    npt.assert_allclose(s.uprime.values, np.cos(grid.x), atol=1e-10)
    s = integrate_linear(grid.zeros(), grid.sample(np.sin), 0.0, 0.0)
    assert abs(s.u.values[-1] - math.pi) <= 1e-8


def test_nonlinear_examples(grid):
    s = integrate_nonlinear(parse("u"), grid.zeros(), {}, 0.0, 1.0)
    assert abs(s.u.values[-1]) <= 1e-8
    e = grid.sample(lambda x: np.sin(2 * x))
    s = integrate_nonlinear(parse("0"), e, {1: 0.0}, 0.0, 0.5)
    d2 = second_derivative(s.u.values, grid.spacing)
    assert np.max(np.abs(d2 - e.values[3:-3])) <= 1e-7


def test_nonlinear_matches_linear_for_linear_G(grid):
    a = grid.sample(lambda x: 0 * x + 2.5)
    f = grid.sample(lambda x: np.cos(3 * x))
    lin = integrate_linear(a, f + 0.7 * grid.sample(np.sin), 0.1, 0.2)
    non = integrate_nonlinear(parse("2.5*u"), f, {1: 0.7}, 0.1, 0.2)
    npt.assert_allclose(non.u.values, lin.u.values, atol=1e-11)


def test_rk4_order():
    errs = []
    for n in (64, 128, 256):
        g = Grid(math.pi, n)
        errs.append(abs(integrate_linear(g.constant(1.0), g.zeros(), 0.0, 1.0).u.values[-1]))
    assert errs[0] / errs[1] >= 14 and errs[1] / errs[2] >= 14


def test_variable_coefficient_order():
    # u = exp(sin x) solves u'' + a u = 0 with a = sin x - cos^2 x
    errs = []
    for n in (64, 128, 256):
        g = Grid(math.pi, n)
        a = g.sample(lambda x: np.sin(x) - np.cos(x) ** 2)
        s = integrate_linear(a, g.zeros(), 1.0, 1.0)
        errs.append(np.max(np.abs(s.u.values - np.exp(np.sin(g.x)))))
    assert errs[0] / errs[1] >= 14 and errs[1] / errs[2] >= 14


def test_linearity_in_rhs():
    g = Grid(math.pi, 256)
    rng = np.random.default_rng(7)
    c = rng.normal(size=(3, 4))

    def smooth(row):
        return g.sample(lambda x: sum(ci * np.cos(j * x) for j, ci in enumerate(row)))

    a, f1, f2 = (smooth(r) for r in c)
    alpha, beta = 1.7, -0.4
    lhs = integrate_linear(a, alpha * f1 + beta * f2, 0.0, 0.0).u.values
    rhs = alpha * integrate_linear(a, f1, 0.0, 0.0).u.values + beta * integrate_linear(a, f2, 0.0, 0.0).u.values
    npt.assert_allclose(lhs, rhs, atol=1e-9)


def test_overflow_is_reported():
    g = Grid(math.pi, 64)
    with pytest.raises(IntegrationOverflow):
        integrate_nonlinear(parse("-u^3"), g.zeros(), {}, 0.0, 50.0)


def test_grid_mismatch():
    with pytest.raises(ValueError):
        integrate_linear(Grid(math.pi, 8).zeros(), Grid(math.pi, 16).zeros(), 0, 0)
