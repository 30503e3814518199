import math

import numpy as np
import numpy.testing as npt
import pytest

from equiharmonic.expression import DomainError
from equiharmonic.grid import Grid, harmonic_projection
from equiharmonic.newton import (
    ForcingNotOrthogonal,
    NoConvergence,
    ProblemSpec,
    newton_solve,
    projected_mu_identity,
    residual_sup,
    second_derivative,
)


@pytest.fixture(scope="module")
def linear_problem():
    return ProblemSpec.from_expressions("u", "sin(2*x)")


def test_linear_problem_one_iteration(linear_problem):
    r = newton_solve(linear_problem, {1: math.pi / 2})
    x = linear_problem.grid.x
    assert r.converged and r.newton_iterations == 1
    assert abs(r.mu[1]) <= 1e-7
    npt.assert_allclose(r.u.values, np.sin(x) - np.sin(2 * x) / 3, atol=1e-6)
    assert projected_mu_identity(r, linear_problem)[1] <= 1e-6


def test_zero_problem_identity():
    p = ProblemSpec.from_expressions("u", "0")
    r = newton_solve(p, {1: 0.0})
    assert r.u.sup_norm() == 0.0
    assert projected_mu_identity(r, p)[1] <= 1e-10


@pytest.mark.parametrize("name,xi", [("fig1", 7.0), ("fig2", -2.0), ("fig3", 0.0), ("fig3", 12.5)])
def test_builtin_records(builtins, name, xi):
    p = builtins[name]
    r = newton_solve(p, {1: xi})
    assert r.converged and r.newton_iterations <= 12
    assert r.residual_sup <= 1e-6
    assert r.last_step <= 1e-10 * (1 + r.sup_norm_u)
    assert abs(harmonic_projection(r.u, 1) - xi) <= 1e-6 * (1 + abs(xi))
    assert abs(r.u.values[-1]) <= 1e-8 * (1 + r.sup_norm_u)
    assert projected_mu_identity(r, p)[1] <= 1e-5 * (1 + abs(r.mu[1]))


def test_fig3_large_signature(builtins):
    r = newton_solve(builtins["fig3"], {1: 50.0})
    assert abs(r.mu[1] - 4 / math.pi) <= 0.05
    assert r.residual_sup <= 1e-6 * (1 + r.sup_norm_u)


def test_multi_harmonic_signature(builtins):
    p = builtins["higher-ev"]
    r = newton_solve(p, {1: 0.4, 2: -1.5})
    assert r.converged
    for k, x in r.xi.items():
        assert abs(harmonic_projection(r.u, k) - x) <= 1e-7 * (1 + abs(x))
    d = projected_mu_identity(r, p)
    assert max(d.values()) <= 1e-5


def test_uniqueness_from_several_guesses(builtins):
    p = builtins["fig3"]
    g = p.grid
    rng = np.random.default_rng(5)
    coef = rng.normal(size=6)
    guesses = [
        g.zeros(),
        g.sample(lambda x: 40 * np.sin(x)),
        g.sample(lambda x: -40 * np.sin(x)),
        g.sample(lambda x: sum(c * np.sin((j + 1) * x) for j, c in enumerate(coef))),
        newton_solve(p, {1: 2.5}).u,
    ]
    recs = [newton_solve(p, {1: 3.0}, u0) for u0 in guesses]
    for r in recs[1:]:
        assert abs(r.mu[1] - recs[0].mu[1]) <= 1e-6
        assert np.max(np.abs(r.u.values - recs[0].u.values)) <= 1e-6


def test_forcing_must_be_orthogonal():
    with pytest.raises(ForcingNotOrthogonal) as info:
        ProblemSpec.from_expressions("u", "sin(x)")
    assert info.value.harmonic == 1
    assert info.value.projection == pytest.approx(math.pi / 2, rel=1e-6)


def test_signature_keys_must_match(builtins):
    with pytest.raises(ValueError):
        newton_solve(builtins["fig3"], {2: 1.0})


def test_no_convergence_carries_best_record():
    p = ProblemSpec.from_expressions("u + u/sqrt(u^2+1)", "5*sin(2*x)")
    with pytest.raises(NoConvergence) as info:
        newton_solve(p, {1: 20.0}, max_iter=1)
    rec = info.value.record
    assert not rec.converged and rec.newton_iterations == 1


def test_domain_error_propagates():
    p = ProblemSpec.from_expressions("u + log(u + 2)", "0")
    with pytest.raises(DomainError):
        newton_solve(p, {1: -10.0})


def test_second_derivative_sixth_order():
    errs = []
    for n in (8, 16):
        g = Grid(math.pi, n)
        d2 = second_derivative(np.sin(g.x), g.spacing)
        errs.append(np.max(np.abs(d2 + np.sin(g.x[3:-3]))))
    assert errs[0] / errs[1] > 50


def test_residual_of_exact_solution():
    p = ProblemSpec.from_expressions("u", "sin(2*x)")
    u = p.grid.sample(lambda x: np.sin(x) - np.sin(2 * x) / 3)
    assert residual_sup(p, u, {1: 0.0}) <= 1e-8


def test_fingerprint_and_regrid(builtins):
    p = builtins["fig3"]
    assert p.fingerprint() == ProblemSpec.from_expressions(
        p.nonlinearity.source, p.forcing_source, (1,)).fingerprint()
    q = p.with_grid(256)
    assert q.grid.n_intervals == 256 and q.fingerprint() != p.fingerprint()


def test_record_orthogonal_part(builtins):
    r = newton_solve(builtins["fig3"], {1: 4.0})
    assert abs(harmonic_projection(r.U(), 1)) <= 1e-9
