"""Constrained linear solve at resonance.

Given a(x), f(x) and prescribed projections xi_k (k in a harmonic set H),
find u and the coefficients mu_k with

    u'' + a(x) u = sum_k mu_k phi_k + f(x),   u(0) = u(L) = 0,
    int_0^L u phi_k dx = xi_k  for k in H.

By superposition u = sum_k mu_k Y_k + Y_f + c1 u1, where Y_k and Y_f are
particular solutions started from (0, 0) and u1 is the homogeneous solution
with u(0) = 0, u'(0) = 1.  The boundary condition at L and the |H|
projection conditions give a dense (|H|+1)-dimensional system for
(mu, c1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .grid import GridFunction, eigenvalue, integrate_samples, sine_samples
from .ivp import integrate_linear_batch

__all__ = [
    "MAX_HARMONIC",
    "SingularSystem",
    "LinearSolution",
    "SpectralReport",
    "harmonic_set",
    "solve_constrained",
    "check_spectral_condition",
]

MAX_HARMONIC = 64
PIVOT_RATIO_MIN = 1e-12


class SingularSystem(ArithmeticError):
    """The constrained linear system is (numerically) singular."""

    def __init__(self, condition: float, message: str = ""):
        self.condition = condition
        super().__init__(
            message
            or f"constrained linear system is singular (pivot ratio {condition:.3g}); "
            "a(x) likely leaves the spectral window of the harmonic set"
        )


def harmonic_set(keys) -> tuple[int, ...]:
    """Validate and sort a harmonic index set."""
    keys = list(keys)
    if any(isinstance(k, bool) or int(k) != k for k in keys):
        raise ValueError(f"harmonic indices must be integers, got {keys}")
    H = tuple(sorted(int(k) for k in keys))
    if not H:
        raise ValueError("harmonic set must be non-empty")
    if len(set(H)) != len(H):
        raise ValueError(f"duplicate harmonic indices in {H}")
    if H[0] < 1 or H[-1] > MAX_HARMONIC:
        raise ValueError(f"harmonic indices must lie in 1..{MAX_HARMONIC}, got {H}")
    return H


@dataclass(frozen=True)
class LinearSolution:
    u: GridFunction
    uprime0: float
    mu: dict[int, float]
    c1: float
    condition_estimate: float
    uprime: GridFunction | None = field(default=None, repr=False)


def _solve_pivoting(A: np.ndarray, b: np.ndarray):
    """Gaussian elimination with partial pivoting; returns (x, pivots)."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    pivots = np.empty(n)
    for j in range(n):
        p = j + int(np.argmax(np.abs(A[j:, j])))
        if p != j:
            A[[j, p]] = A[[p, j]]
            b[[j, p]] = b[[p, j]]
        pivots[j] = A[j, j]
        if pivots[j] == 0.0:
            continue
        factors = A[j + 1:, j] / A[j, j]
        A[j + 1:, j:] -= np.outer(factors, A[j, j:])
        b[j + 1:] -= factors * b[j]
    mags = np.abs(pivots)
    if mags.min() < PIVOT_RATIO_MIN * mags.max() or mags.max() == 0.0:
        cond = math.inf if mags.min() == 0.0 else float(mags.max() / mags.min())
        raise SingularSystem(cond)
    x = np.empty(n)
    for j in range(n - 1, -1, -1):
        x[j] = (b[j] - A[j, j + 1:] @ x[j + 1:]) / A[j, j]
    return x, pivots


def solve_constrained(a: GridFunction, f: GridFunction, xi: Mapping[int, float]) -> LinearSolution:
    """Solve the constrained linear problem for u and mu."""
    if a.grid != f.grid:
        raise ValueError("a and f live on different grids")
    grid = a.grid
    H = harmonic_set(xi.keys())
    m = len(H)
    phis = np.stack([sine_samples(grid, k) for k in H])

    rhs = np.vstack([phis, f.values[None, :], np.zeros((1, grid.n_samples))])
    up0 = np.zeros(m + 2)
    up0[-1] = 1.0
    U, V = integrate_linear_batch(grid, a.values, rhs, np.zeros(m + 2), up0)
    Y, Yf, u1 = U[:m], U[m], U[m + 1]

    # unknowns (mu_1..mu_m, c1)
    basis = np.vstack([Y, u1[None, :]])
    A = np.empty((m + 1, m + 1))
    b = np.empty(m + 1)
    A[0] = basis[:, -1]
    b[0] = -Yf[-1]
    A[1:] = integrate_samples(grid, phis[:, None, :] * basis[None, :, :])
    b[1:] = np.array([xi[k] for k in H], dtype=float) - integrate_samples(grid, phis * Yf)

    sol, pivots = _solve_pivoting(A, b)
    mags = np.abs(pivots)
    u = sol @ basis + Yf
    uprime = sol @ np.vstack([V[:m], V[m + 1][None, :]]) + V[m]
    return LinearSolution(
        u=GridFunction(grid, u),
        uprime0=float(sol[-1]),
        mu={k: float(v) for k, v in zip(H, sol[:m])},
        c1=float(sol[-1]),
        condition_estimate=float(mags.max() / mags.min()),
        uprime=GridFunction(grid, uprime),
    )


@dataclass(frozen=True)
class SpectralReport:
    harmonics: tuple[int, ...]
    derivative_min: float
    derivative_max: float
    lower_bound: float
    upper_bound: float
    contiguous: bool
    passed: bool
    notes: tuple[str, ...] = ()

    def __str__(self):
        status = "pass" if self.passed else "warn"
        lines = [
            f"spectral check [{status}] H={list(self.harmonics)}: "
            f"G' in [{self.derivative_min:.6g}, {self.derivative_max:.6g}], "
            f"window ({self.lower_bound:.6g}, {self.upper_bound:.6g})"
        ]
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


def check_spectral_condition(G, harmonics, u_range=(-100.0, 100.0), length: float = math.pi,
                             samples: int = 10_000) -> SpectralReport:
    """Advisory check that lambda_{i-1} < G'(u) < lambda_{n+1} over ``u_range``.

    Here i = min(H), n = max(H).  Never raises for a failed window; only an
    expression domain error propagates.
    """
    H = harmonic_set(harmonics)
    lo, hi = float(u_range[0]), float(u_range[1])
    u = np.linspace(lo, hi, samples)
    if lo < 0.0 < hi:
        u = np.append(u, 0.0)
    _, d = G.eval_array_with_derivative(u)
    dmin, dmax = float(d.min()), float(d.max())
    i, n = H[0], H[-1]
    lower = eigenvalue(i - 1, length) if i > 1 else -math.inf
    upper = eigenvalue(n + 1, length)
    notes = []
    passed = lower < dmin and dmax < upper
    if dmax >= upper:
        notes.append(f"max G' = {dmax:.6g} >= lambda_{n + 1} = {upper:.6g}")
    if dmin <= lower:
        notes.append(f"min G' = {dmin:.6g} <= lambda_{i - 1} = {lower:.6g}")
    contiguous = H == tuple(range(i, n + 1))
    if not contiguous:
        notes.append("non-contiguous harmonic set: outside the proved theory")
    return SpectralReport(H, dmin, dmax, lower, upper, contiguous, passed, tuple(notes))
