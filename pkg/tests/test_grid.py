import math

import numpy as np
import numpy.testing as npt
import pytest

from equiharmonic.grid import (
    Grid,
    GridFunction,
    NonFiniteError,
    eigenpair,
    harmonic_projection,
    integrate,
    refine,
)


def test_sample_points_exact():
    g = Grid(math.pi, 8)
    assert g.n_samples == 17
    npt.assert_array_equal(g.x, np.arange(17) * math.pi / 16)
    assert g.x[-1] == math.pi


@pytest.mark.parametrize("n", [0, 1, 3, 7, 2.5])
def test_grid_rejects_odd_or_small(n):
    with pytest.raises(ValueError):
        Grid(math.pi, n)


@pytest.mark.parametrize("length", [0.0, -1.0, math.inf, math.nan])
def test_grid_rejects_bad_length(length):
    with pytest.raises(ValueError):
        Grid(length, 8)


def test_gridfunction_rejects_nonfinite_and_wrong_length():
    g = Grid(math.pi, 4)
    vals = np.zeros(g.n_samples)
    vals[3] = np.nan
    with pytest.raises(NonFiniteError):
        GridFunction(g, vals)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(4))


def test_gridfunction_is_immutable():
    f = Grid(math.pi, 4).zeros()
    with pytest.raises(AttributeError):
        f.values = None
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_simpson_examples():
    g = Grid(math.pi, 256)
    assert abs(integrate(g.sample(lambda x: np.sin(x) ** 2)) - math.pi / 2) <= 1e-10
    assert abs(integrate(g.sample(lambda x: np.sin(x) * np.sin(2 * x)))) <= 1e-10
    # Simpson is exact for cubics
    assert integrate(g.sample(lambda x: x)) == pytest.approx(math.pi ** 2 / 2, rel=1e-15)
    assert integrate(g.sample(lambda x: x ** 3)) == pytest.approx(math.pi ** 4 / 4, rel=1e-14)


def test_simpson_order():
    exact = math.exp(math.pi) - 1
    errs = [abs(integrate(Grid(math.pi, n).sample(np.exp)) - exact) for n in (32, 64, 128)]
    assert errs[0] / errs[1] >= 15
    assert errs[1] / errs[2] >= 15


def test_projection_examples(grid):
    assert abs(harmonic_projection(grid.sample(np.sin), 1) - math.pi / 2) <= 1e-10
    assert abs(harmonic_projection(grid.sample(lambda x: np.sin(2 * x)), 1)) <= 1e-10
    u = grid.sample(lambda x: 3 * np.sin(x) - np.sin(3 * x))
    assert abs(harmonic_projection(u, 3) + math.pi / 2) <= 1e-10


@pytest.mark.parametrize("length", [math.pi, 2.0])
def test_orthonormality(length):
    g = Grid(length, 512)
    for j in range(1, 11):
        phi = eigenpair(j, g).phi
        for k in range(1, 11):
            p = harmonic_projection(phi, k)
            if j == k:
                assert abs(p - length / 2) <= 1e-9
            else:
                assert abs(p) < 1e-9 * length


@pytest.mark.parametrize("k,length,lam", [(1, math.pi, 1.0), (3, math.pi, 9.0), (2, 2 * math.pi, 1.0)])
def test_eigenpair(k, length, lam):
    e = eigenpair(k, Grid(length, 16))
    assert e.eigenvalue == pytest.approx(lam, rel=1e-15)
    assert e.phi.values[0] == 0.0 and e.phi.values[-1] == 0.0


def test_refine_sixth_order():
    errs = []
    for n in (32, 64, 128):
        x = np.linspace(0, 1, n + 1)
        fine = refine(np.exp(x))
        xf = np.linspace(0, 1, 2 * n + 1)
        errs.append(np.max(np.abs(fine - np.exp(xf))))
    assert errs[0] / errs[1] > 50 and errs[1] / errs[2] > 50


def test_refine_exact_for_quintics():
    x = np.linspace(-1, 2, 13)
    p = lambda t: 1 - 2 * t + t ** 3 - 0.5 * t ** 5
    npt.assert_allclose(refine(p(x)), p(np.linspace(-1, 2, 25)), atol=1e-12)
