import dataclasses
import math

import pytest

from equiharmonic.newton import ProblemSpec, newton_solve
from equiharmonic.verify import verify_by_reintegration, verify_initial_data


def test_zero_problem():
    p = ProblemSpec.from_expressions("u", "0")
    rep = verify_by_reintegration(newton_solve(p, {1: 0.0}), p)
    assert rep.passed and rep.endpoint <= 1e-10 and rep.max_deviation <= 1e-10
    assert rep.signature_defects[1] <= 1e-10


@pytest.mark.parametrize("name,xi", [("fig1", -15.0), ("fig2", 4.0), ("fig3", 30.0)])
def test_builtin_records_pass(builtins, name, xi):
    p = builtins[name]
    rep = verify_by_reintegration(newton_solve(p, {1: xi}), p)
    assert rep.passed, str(rep)
    assert rep.max_deviation <= 1e-6 * (1 + abs(xi))


def test_perturbed_slope_fails(builtins):
    p = builtins["fig3"]
    r = newton_solve(p, {1: 5.0})
    bad = dataclasses.replace(r, uprime0=r.uprime0 + 1e-2)
    rep = verify_by_reintegration(bad, p)
    assert not rep.passed and rep.endpoint > 1e-3


def test_overflow_reported_not_raised():
    p = ProblemSpec.from_expressions("u - u^3", "0")
    rep = verify_initial_data(p, {1: 0.0}, {1: 0.0}, 1e3, sup_norm_u=0.0)
    assert not rep.passed and rep.error and math.isinf(rep.endpoint)
    assert "FAIL" in str(rep)


def test_without_samples_uses_stored_norm(builtins):
    p = builtins["fig2"]
    r = newton_solve(p, {1: 1.0})
    rep = verify_initial_data(p, r.xi, r.mu, r.uprime0, sup_norm_u=r.sup_norm_u)
    assert rep.passed and math.isnan(rep.max_deviation)
