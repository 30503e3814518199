"""Newton iteration for the nonlinear constrained problem

    u'' + G(u) = sum_{k in H} mu_k phi_k + e(x),  u(0) = u(L) = 0,
    int_0^L u phi_k dx = xi_k.

Each iterate solves the problem linearized at u_n, i.e. a constrained linear
solve with a = G'(u_n) and f = G'(u_n) u_n - G(u_n) + e.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .expression import Expression, parse
from .grid import Grid, GridFunction, eigenvalue, harmonic_projection, integrate, sine_samples
from .ivp import forcing_samples
from .linear import harmonic_set, solve_constrained

__all__ = [
    "ProblemSpec",
    "SolutionRecord",
    "NoConvergence",
    "ForcingNotOrthogonal",
    "newton_solve",
    "residual_sup",
    "projected_mu_identity",
]

STEP_TOL = 1e-10
RESIDUAL_TOL = 1e-6
MAX_ITER = 12


class ForcingNotOrthogonal(ValueError):
    def __init__(self, k: int, projection: float, tol: float):
        self.harmonic = k
        self.projection = projection
        super().__init__(f"forcing is not orthogonal to phi_{k}: int e phi_{k} dx = {projection:.6g} (tol {tol:.3g})")


class NoConvergence(ArithmeticError):
    """Newton did not converge; ``record`` holds the best iterate."""

    def __init__(self, record: "SolutionRecord", message: str = ""):
        self.record = record
        super().__init__(message or f"Newton did not converge at xi={record.xi} "
                         f"after {record.newton_iterations} iterations (residual {record.residual_sup:.3g})")


@dataclass(frozen=True)
class ProblemSpec:
    grid: Grid
    nonlinearity: Expression
    forcing: GridFunction
    harmonics: tuple[int, ...]
    name: str = "custom"
    forcing_source: str = ""
    ortho_rtol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "harmonics", harmonic_set(self.harmonics))
        if self.nonlinearity.variable != "u":
            raise ValueError("the nonlinearity must be an expression in u")
        if self.forcing.grid != self.grid:
            raise ValueError("forcing is sampled on a different grid")
        norm = math.sqrt(integrate(self.forcing * self.forcing))
        tol = self.ortho_rtol * norm
        for k in self.harmonics:
            p = harmonic_projection(self.forcing, k)
            if abs(p) > tol:
                raise ForcingNotOrthogonal(k, p, tol)

    @classmethod
    def from_expressions(cls, nonlinearity: str, forcing: str, harmonics=(1,), length: float = math.pi,
                         n_intervals: int = 1024, name: str = "custom", **kwargs) -> "ProblemSpec":
        grid = Grid(length, n_intervals)
        G = parse(nonlinearity, "u")
        e = parse(forcing, "x")
        return cls(grid, G, GridFunction(grid, e.eval_array(grid.x)), tuple(harmonics), name, forcing, **kwargs)

    @property
    def length(self) -> float:
        return self.grid.length

    def with_nonlinearity(self, source: str, name: str | None = None) -> "ProblemSpec":
        return ProblemSpec(self.grid, parse(source, "u"), self.forcing, self.harmonics, name or self.name,
                           self.forcing_source, self.ortho_rtol)

    def with_grid(self, n_intervals: int) -> "ProblemSpec":
        if not self.forcing_source:
            raise ValueError("cannot resample a forcing term without its source expression")
        return ProblemSpec.from_expressions(self.nonlinearity.source, self.forcing_source, self.harmonics,
                                            self.length, n_intervals, self.name, ortho_rtol=self.ortho_rtol)

    def fingerprint(self) -> str:
        payload = json.dumps({
            "nonlinearity": self.nonlinearity.source,
            "forcing": self.forcing_source,
            "harmonics": list(self.harmonics),
            "length": repr(self.length),
            "n_intervals": self.grid.n_intervals,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def cold_start(self, xi: Mapping[int, float]) -> GridFunction:
        """Solution of the problem linearized at u = 0."""
        g0, d0 = self.nonlinearity.eval_with_derivative(0.0)
        return solve_constrained(self.grid.constant(d0), self.forcing - g0, xi).u


@dataclass(frozen=True)
class SolutionRecord:
    xi: dict[int, float]
    mu: dict[int, float]
    u: GridFunction
    uprime0: float
    residual_sup: float
    newton_iterations: int
    converged: bool
    last_step: float = math.nan
    condition_estimate: float = field(default=math.nan, repr=False)

    @property
    def sup_norm_u(self) -> float:
        return self.u.sup_norm()

    def U(self) -> GridFunction:
        """Component of u orthogonal to the constrained harmonics."""
        L = self.u.grid.length
        out = self.u
        for k, x in self.xi.items():
            out = out - (2.0 * x / L) * GridFunction(self.u.grid, sine_samples(self.u.grid, k))
        return out


# sixth-order central stencil for u''
_D2_WEIGHTS = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_D2_HALF = 3


def second_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Sixth-order central-difference u'' at samples 3 .. len-4."""
    n = values.shape[0]
    m = n - 2 * _D2_HALF
    d = sum(w * values[i:i + m] for i, w in enumerate(_D2_WEIGHTS))
    return d / (h * h)


def residual_sup(problem: ProblemSpec, u: GridFunction, mu: Mapping[int, float]) -> float:
    """sup |u'' + G(u) - sum mu_k phi_k - e| over interior samples.

    u'' comes from central finite differences.  The three samples nearest
    each end are skipped: u is pinned there by the boundary conditions and
    one-sided stencils cannot resolve the boundary layer of width ~1/|xi|
    that large signatures produce.
    """
    k = _D2_HALF
    d2 = second_derivative(u.values, problem.grid.spacing)
    inner = u.values[k:-k]
    r = d2 + problem.nonlinearity.eval_array(inner) - forcing_samples(problem.forcing, mu)[k:-k]
    return float(np.max(np.abs(r)))


def newton_solve(problem: ProblemSpec, xi: Mapping[int, float], initial_guess: GridFunction | None = None, *,
                 step_tol: float = STEP_TOL, residual_tol: float = RESIDUAL_TOL,
                 max_iter: int = MAX_ITER) -> SolutionRecord:
    """Solve the constrained nonlinear problem at signature ``xi``.

    Stops once the sup-norm update drops below ``step_tol * (1 + |u_n|)``;
    the iterate is accepted if its residual is at most
    ``residual_tol * (1 + |u|)``.  Both bounds are relative because the
    boundary layer at large |xi| scales the discretization error with |u|.
    Raises :class:`NoConvergence` (carrying the best iterate) otherwise.
    """
    xi = {int(k): float(v) for k, v in xi.items()}
    if set(xi) != set(problem.harmonics):
        raise ValueError(f"signature keys {sorted(xi)} do not match harmonics {list(problem.harmonics)}")
    G = problem.nonlinearity
    e = problem.forcing.values
    grid = problem.grid
    u = problem.cold_start(xi) if initial_guess is None else initial_guess
    if u.grid != grid:
        raise ValueError("initial guess lives on a different grid")

    best = None
    steps: list[float] = []
    halved = False
    mu_prev, up0_prev = None, None
    for it in range(1, max_iter + 1):
        g, dg = G.eval_array_with_derivative(u.values)
        lin = solve_constrained(GridFunction(grid, dg), GridFunction(grid, dg * u.values - g + e), xi)
        u_new, mu, up0 = lin.u, lin.mu, lin.uprime0
        step = float(np.max(np.abs(u_new.values - u.values)))
        if not halved and mu_prev is not None and len(steps) >= 2 and step > steps[-1] > steps[-2]:
            # diverging: take half a step once; averaging keeps the projections exact
            halved = True
            u_new = GridFunction(grid, 0.5 * (u.values + u_new.values))
            mu = {k: 0.5 * (mu[k] + mu_prev[k]) for k in mu}
            up0 = 0.5 * (up0 + up0_prev)
            step *= 0.5
        steps.append(step)
        tol = step_tol * (1.0 + float(np.max(np.abs(u.values))))
        u, mu_prev, up0_prev = u_new, mu, up0
        res = residual_sup(problem, u, mu)
        done = step <= tol and res <= residual_tol * (1.0 + u.sup_norm())
        record = SolutionRecord(xi, dict(mu), u, float(up0), res, it, done, step, lin.condition_estimate)
        if done:
            return record
        if best is None or res < best.residual_sup:
            best = record
        if step <= tol:
            break
    raise NoConvergence(best)


def projected_mu_identity(record: SolutionRecord, problem: ProblemSpec) -> dict[int, float]:
    """Per-harmonic defect |mu_k L/2 + lambda_k xi_k - int G(u) phi_k + int e phi_k|."""
    L = problem.length
    Gu = GridFunction(problem.grid, problem.nonlinearity.eval_array(record.u.values))
    out = {}
    for k in problem.harmonics:
        d = (record.mu[k] * L / 2.0 + eigenvalue(k, L) * record.xi[k]
             - harmonic_projection(Gu, k) + harmonic_projection(problem.forcing, k))
        out[k] = abs(d)
    return out
