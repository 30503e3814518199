"""Fixed-step classical RK4 for u'' = rhs(x) - a(x) u and u'' = F(x) - G(u).

Each of the 2N steps goes from one grid sample to the next (step L/(2N)), so
every sample of the returned solution is an RK4 step endpoint.  The stage at
the half step needs coefficient values between samples; those come from a
sixth-order interpolation of the coefficient grid functions.  Interpolated
coefficients only perturb the ODE, whose solution smooths the perturbation
out, whereas interpolated solution values would leave a sample-to-sample
sawtooth that finite-difference residual checks amplify by 1/h^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .grid import Grid, GridFunction, refine, sine_samples

__all__ = ["IvpSolution", "IntegrationOverflow", "integrate_linear", "integrate_nonlinear", "forcing_samples"]

# state magnitude treated as blow-up in the scalar nonlinear loop
_BLOWUP = 1e150


class IntegrationOverflow(ArithmeticError):
    def __init__(self, step: int, message: str = "non-finite state"):
        self.step = step
        super().__init__(f"{message} at RK4 step {step}")


@dataclass(frozen=True)
class IvpSolution:
    u: GridFunction
    uprime: GridFunction
    u0: float
    up0: float


def _rk4_affine(u, v, a0, am, a1, r0, rm, r1, h):
    """One RK4 step of (u, v)' = (v, r - a u); vectorized over steps."""
    k1u = v
    k1v = r0 - a0 * u
    k2u = v + 0.5 * h * k1v
    k2v = rm - am * (u + 0.5 * h * k1u)
    k3u = v + 0.5 * h * k2v
    k3v = rm - am * (u + 0.5 * h * k2u)
    k4u = v + h * k3v
    k4v = r1 - a1 * (u + h * k3u)
    return (u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v))


def integrate_linear_batch(grid: Grid, a: np.ndarray, rhs: np.ndarray, u0, up0):
    """Integrate u'' + a u = rhs_c for every row c of ``rhs``.

    ``a`` has 2N+1 samples, ``rhs`` has shape (C, 2N+1), ``u0``/``up0`` are
    length-C initial data.  Returns (u, u') sample arrays of shape (C, 2N+1).
    Each RK4 step is an affine map y -> M_n y + b_n of the state, so the
    maps are built for all steps at once and only the recurrence is serial.
    """
    h = grid.spacing
    rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
    C = rhs.shape[0]
    af = refine(a)
    rf = refine(rhs)
    a0, am, a1 = af[0:-1:2], af[1::2], af[2::2]
    zero = np.zeros_like(a0)
    one = np.ones_like(a0)
    m_u = _rk4_affine(one, zero, a0, am, a1, zero, zero, zero, h)
    m_v = _rk4_affine(zero, one, a0, am, a1, zero, zero, zero, h)
    # M[n] = [[du+/du, du+/dv], [dv+/du, dv+/dv]]
    M = np.stack([np.stack([m_u[0], m_v[0]], -1), np.stack([m_u[1], m_v[1]], -1)], -2)
    bu, bv = _rk4_affine(0.0, 0.0, a0, am, a1, rf[:, 0:-1:2], rf[:, 1::2], rf[:, 2::2], h)
    B = np.stack([bu, bv], 0).transpose(2, 0, 1)  # (steps, 2, C)

    n = grid.n_samples - 1
    Y = np.empty((n + 1, 2, C))
    Y[0, 0] = u0
    Y[0, 1] = up0
    y = Y[0]
    for i in range(n):
        y = M[i] @ y + B[i]
        Y[i + 1] = y
    if not np.all(np.isfinite(Y)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(Y), axis=(1, 2)))[0])
        raise IntegrationOverflow(bad)
    return Y[:, 0, :].T, Y[:, 1, :].T


def integrate_linear(a: GridFunction, rhs: GridFunction, u0: float, up0: float) -> IvpSolution:
    """Solve u'' + a(x) u = rhs(x), u(0) = u0, u'(0) = up0 on the grid."""
    if a.grid != rhs.grid:
        raise ValueError("coefficient and right-hand side live on different grids")
    grid = a.grid
    U, V = integrate_linear_batch(grid, a.values, rhs.values[None, :], [u0], [up0])
    return IvpSolution(GridFunction(grid, U[0]), GridFunction(grid, V[0]), float(u0), float(up0))


def forcing_samples(e: GridFunction, mu: Mapping[int, float]) -> np.ndarray:
    """Samples of sum_k mu_k sin(k pi x/L) + e(x)."""
    f = np.array(e.values)
    for k, m in mu.items():
        f += m * sine_samples(e.grid, k)
    return f


def integrate_nonlinear(G, e: GridFunction, mu: Mapping[int, float], u0: float, up0: float) -> IvpSolution:
    """Solve u'' = sum_k mu_k phi_k + e(x) - G(u) from (u0, up0)."""
    grid = e.grid
    h = grid.spacing
    f = refine(forcing_samples(e, mu)).tolist()
    g = G.eval
    n = grid.n_samples - 1
    us = [0.0] * (n + 1)
    vs = [0.0] * (n + 1)
    u, v = float(u0), float(up0)
    us[0], vs[0] = u, v
    hh = 0.5 * h
    i = 0
    try:
        for i in range(n):
            f0, fm, f1 = f[2 * i], f[2 * i + 1], f[2 * i + 2]
            k1u = v
            k1v = f0 - g(u)
            k2u = v + hh * k1v
            k2v = fm - g(u + hh * k1u)
            k3u = v + hh * k2v
            k3v = fm - g(u + hh * k2u)
            k4u = v + h * k3v
            k4v = f1 - g(u + h * k3u)
            u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            if not (abs(u) < _BLOWUP and abs(v) < _BLOWUP):
                raise IntegrationOverflow(i + 1)
            us[i + 1], vs[i + 1] = u, v
    except OverflowError as exc:
        raise IntegrationOverflow(i + 1, str(exc)) from exc
    return IvpSolution(GridFunction(grid, us), GridFunction(grid, vs), float(u0), float(up0))
