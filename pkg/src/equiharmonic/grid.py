"""Uniform grids on [0, L], grid functions and Simpson quadrature.

A grid with ``n_intervals = N`` holds 2N+1 samples at spacing L/(2N) (the
N+1 nodes of step h = L/N plus the midpoints between them).  The integrators
step from sample to sample, so every sample of a solution is an RK4 step
endpoint, and composite Simpson uses exactly the same samples.

The Dirichlet eigenfunctions are kept unnormalized, ``phi_k = sin(k pi x / L)``,
so that ``int_0^L phi_k^2 dx = L/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "Eigenpair",
    "NonFiniteError",
    "integrate",
    "harmonic_projection",
    "eigenpair",
]


class NonFiniteError(ValueError):
    """Raised when a grid function would contain NaN or Inf."""


@dataclass(frozen=True)
class Grid:
    length: float = math.pi
    n_intervals: int = 1024

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"grid length must be positive and finite, got {self.length!r}")
        if int(self.n_intervals) != self.n_intervals or self.n_intervals < 2 or self.n_intervals % 2:
            raise ValueError(f"n_intervals must be an even integer >= 2, got {self.n_intervals!r}")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "n_intervals", int(self.n_intervals))

    @property
    def n_samples(self) -> int:
        return 2 * self.n_intervals + 1

    @property
    def step(self) -> float:
        """Integrator step h = L/N."""
        return self.length / self.n_intervals

    @property
    def spacing(self) -> float:
        """Sample spacing L/(2N)."""
        return self.length / (2 * self.n_intervals)

    @property
    def x(self) -> np.ndarray:
        return _sample_points(self)

    def function(self, values) -> GridFunction:
        return GridFunction(self, values)

    def sample(self, func) -> GridFunction:
        """Sample a vectorized callable ``func(x)`` at every grid point."""
        return GridFunction(self, np.broadcast_to(func(self.x), (self.n_samples,)))

    def constant(self, value: float) -> GridFunction:
        return GridFunction(self, np.full(self.n_samples, float(value)))

    def zeros(self) -> GridFunction:
        return self.constant(0.0)


@lru_cache(maxsize=32)
def _sample_points(grid: Grid) -> np.ndarray:
    x = np.arange(grid.n_samples) * grid.spacing
    x[-1] = grid.length
    x.flags.writeable = False
    return x


@lru_cache(maxsize=32)
def _simpson_weights(grid: Grid) -> np.ndarray:
    w = np.empty(grid.n_samples)
    w[0::2] = 2.0
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= grid.spacing / 3.0
    w.flags.writeable = False
    return w


@lru_cache(maxsize=256)
def _sine(grid: Grid, k: int) -> np.ndarray:
    s = np.sin(k * math.pi * _sample_points(grid) / grid.length)
    # pin the boundary zeros; sin(k*pi) is only ~1e-16 in floating point
    s[0] = s[-1] = 0.0
    s.flags.writeable = False
    return s


class GridFunction:
    """Immutable samples of a function on a :class:`Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float)
        if arr.shape != (grid.n_samples,):
            raise ValueError(f"expected {grid.n_samples} samples, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise NonFiniteError(f"non-finite grid value at sample {bad} (x = {grid.x[bad]:.6g})")
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def __repr__(self):
        return f"GridFunction(N={self.grid.n_intervals}, L={self.grid.length:g}, sup={self.sup_norm():.6g})"

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return other.values
        return float(other)

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def at_nodes(self) -> np.ndarray:
        """Values at the N+1 integrator nodes (even samples)."""
        return self.values[0::2]


@dataclass(frozen=True)
class Eigenpair:
    index: int
    eigenvalue: float
    phi: GridFunction


def integrate(f) -> float:
    """Composite Simpson integral over [0, L] using all 2N+1 samples."""
    if not isinstance(f, GridFunction):
        raise TypeError("integrate expects a GridFunction")
    return float(_simpson_weights(f.grid) @ f.values)


def integrate_samples(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Simpson integrals of raw sample arrays along the last axis."""
    return values @ _simpson_weights(grid)


# six-point Lagrange weights for the point halfway between samples
_MID_CENTRAL = np.array([3.0, -25.0, 150.0, 150.0, -25.0, 3.0]) / 256.0
_MID_FIRST = np.array([63.0, 315.0, -210.0, 126.0, -45.0, 7.0]) / 256.0
_MID_SECOND = np.array([-7.0, 105.0, 210.0, -70.0, 21.0, -3.0]) / 256.0


def refine(values: np.ndarray) -> np.ndarray:
    """Insert sixth-order interpolated values halfway between samples.

    Works along the last axis; n samples become 2n-1.  Used only for ODE
    coefficients at RK4 half-step stages, never for solution values.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    if n < 6:
        raise ValueError("need at least 6 samples to refine")
    mid = np.empty(v.shape[:-1] + (n - 1,))
    m = n - 5
    mid[..., 2:-2] = sum(w * v[..., i:i + m] for i, w in enumerate(_MID_CENTRAL))
    mid[..., 0] = v[..., :6] @ _MID_FIRST
    mid[..., 1] = v[..., :6] @ _MID_SECOND
    mid[..., -1] = v[..., -6:][..., ::-1] @ _MID_FIRST
    mid[..., -2] = v[..., -6:][..., ::-1] @ _MID_SECOND
    out = np.empty(v.shape[:-1] + (2 * n - 1,))
    out[..., 0::2] = v
    out[..., 1::2] = mid
    return out


def eigenvalue(k: int, length: float) -> float:
    return (k * math.pi / length) ** 2


def sine_samples(grid: Grid, k: int) -> np.ndarray:
    """Read-only samples of sin(k pi x / L)."""
    if k < 1:
        raise ValueError(f"harmonic index must be >= 1, got {k}")
    return _sine(grid, int(k))


def eigenpair(k: int, grid: Grid) -> Eigenpair:
    if k < 1:
        raise ValueError(f"harmonic index must be >= 1, got {k}")
    return Eigenpair(int(k), eigenvalue(k, grid.length), GridFunction(grid, _sine(grid, int(k))))


def harmonic_projection(u: GridFunction, k: int) -> float:
    """Return int_0^L u(x) sin(k pi x / L) dx."""
    return float(_simpson_weights(u.grid) @ (u.values * sine_samples(u.grid, k)))
