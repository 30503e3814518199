"""Continuation along solution curves.

* :func:`trace_curve` marches one signature component over a mesh, warm
  starting each Newton solve from the previous solution.
* :func:`solve_for_mu` finds every mesh cell where mu crosses a target and
  refines the crossing by bisection on xi.
* :func:`homotopy_in_k` follows G = G0 + k G1 at a fixed signature.
* :func:`find_signature_for_target` solves the outer system mu(xi) = target
  for all constrained harmonics at once.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping

import numpy as np

from .expression import DomainError
from .grid import GridFunction, NonFiniteError, eigenvalue, sine_samples
from .ivp import IntegrationOverflow
from .linear import SingularSystem, check_spectral_condition
from .newton import MAX_ITER, RESIDUAL_TOL, STEP_TOL, NoConvergence, ProblemSpec, SolutionRecord, newton_solve

__all__ = [
    "SolutionCurve",
    "HomotopyCurve",
    "TraceAborted",
    "OuterNoConvergence",
    "SingularOuterJacobian",
    "SpectralWarning",
    "trace_curve",
    "solve_for_mu",
    "homotopy_in_k",
    "find_signature_for_target",
]

DEFAULT_DXI = 0.5
MAX_BISECTIONS = 4
MU_TOL = 1e-7

# anything a single Newton solve can fail with
_SOLVE_FAILURES = (NoConvergence, SingularSystem, IntegrationOverflow, DomainError, NonFiniteError)


class TraceAborted(RuntimeError):
    """A continuation step failed even after bisection.

    ``curve`` holds every record accepted before the failure and ``xi`` the
    parameter value that could not be reached.
    """

    def __init__(self, curve, xi: float, cause: BaseException | None = None):
        self.curve = curve
        self.xi = float(xi)
        self.cause = cause
        super().__init__(f"trace aborted at xi={self.xi:.17g} after {len(curve.records)} points: {cause}")


class OuterNoConvergence(ArithmeticError):
    def __init__(self, message: str, iterates: list):
        self.iterates = iterates
        super().__init__(message)


class SingularOuterJacobian(ArithmeticError):
    def __init__(self, singular_values: np.ndarray, xi: np.ndarray):
        self.singular_values = singular_values
        self.xi = xi
        super().__init__(f"outer Jacobian d mu/d xi is singular at xi={xi.tolist()} "
                         f"(singular values {np.array2string(singular_values, precision=3)}); "
                         "the target does not determine a unique signature")


class SpectralWarning(UserWarning):
    pass


def _metadata(problem: ProblemSpec, newton_kw: Mapping) -> dict:
    return {
        "n_intervals": problem.grid.n_intervals,
        "step_tol": newton_kw.get("step_tol", STEP_TOL),
        "residual_tol": newton_kw.get("residual_tol", RESIDUAL_TOL),
        "max_iter": newton_kw.get("max_iter", MAX_ITER),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


@dataclass
class SolutionCurve:
    """Converged records along one free signature component, in trace order."""

    problem: ProblemSpec
    k_free: int
    records: list[SolutionRecord]
    dxi: float
    fixed: dict[int, float] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    aborted_at: float | None = None

    def __len__(self):
        return len(self.records)

    @property
    def name(self) -> str:
        return self.problem.name

    @property
    def fingerprint(self) -> str:
        return self.problem.fingerprint()

    @property
    def xi(self) -> np.ndarray:
        return np.array([r.xi[self.k_free] for r in self.records])

    def mu(self, k: int | None = None) -> np.ndarray:
        k = self.k_free if k is None else k
        return np.array([r.mu[k] for r in self.records])

    def signature(self, value: float) -> dict[int, float]:
        sig = dict(self.fixed)
        sig[self.k_free] = float(value)
        return sig

    def record_at(self, value: float, atol: float = 1e-12) -> SolutionRecord:
        for r in self.records:
            if abs(r.xi[self.k_free] - value) <= atol:
                return r
        raise KeyError(f"no record at xi={value}")


@dataclass
class HomotopyCurve:
    """Records at fixed signature along k for G = G0 + k G1."""

    base: ProblemSpec
    xi: dict[int, float]
    ks: list[float]
    records: list[SolutionRecord]
    spectral_report: object = None

    def __len__(self):
        return len(self.records)

    def mu(self, k: int) -> np.ndarray:
        return np.array([r.mu[k] for r in self.records])


def _shift_signature(u: GridFunction, old: Mapping[int, float], new: Mapping[int, float]) -> GridFunction:
    """Add sine multiples so that ``u`` carries signature ``new`` instead of ``old``."""
    L = u.grid.length
    vals = np.array(u.values)
    for k in new:
        d = float(new[k]) - float(old[k])
        if d:
            vals += (2.0 * d / L) * sine_samples(u.grid, k)
    return GridFunction(u.grid, vals)


def trace_curve(problem: ProblemSpec, xi_from: float, xi_to: float, dxi: float = DEFAULT_DXI,
                k_free: int | None = None, fixed: Mapping[int, float] | None = None,
                max_bisections: int = MAX_BISECTIONS, **newton_kw) -> SolutionCurve:
    """Trace mu(xi) with xi_{k_free} on the mesh xi_from + i*dxi up to xi_to.

    ``dxi`` only sets the spacing; the direction follows from ``xi_from`` and
    ``xi_to``.  The other signature components are held at ``fixed``
    (default 0).  A failed step is retried with up to ``max_bisections``
    levels of step halving; intermediate points are not recorded.  Raises
    :class:`TraceAborted` carrying the partial curve otherwise.
    """
    if not dxi or not math.isfinite(dxi):
        raise ValueError(f"dxi must be finite and nonzero, got {dxi!r}")
    if k_free is None:
        k_free = problem.harmonics[0]
    if k_free not in problem.harmonics:
        raise ValueError(f"free harmonic {k_free} is not in H = {list(problem.harmonics)}")
    fixed = {k: float((fixed or {}).get(k, 0.0)) for k in problem.harmonics if k != k_free}
    xi_from, xi_to = float(xi_from), float(xi_to)
    span = xi_to - xi_from
    step = math.copysign(abs(float(dxi)), span) if span else abs(float(dxi))
    n = int(math.floor(abs(span) / abs(step) + 1e-9))
    mesh = [xi_from + i * step for i in range(n + 1)]
    if abs(mesh[-1] - xi_to) > 1e-9 * abs(step):
        mesh.append(xi_to)

    curve = SolutionCurve(problem, k_free, [], step, dict(fixed), _metadata(problem, newton_kw))
    curve.metadata["dxi"] = step

    def sig_for(v):
        s = dict(fixed)
        s[k_free] = float(v)
        return s

    try:
        prev = newton_solve(problem, sig_for(mesh[0]), **newton_kw)
    except _SOLVE_FAILURES as exc:
        curve.aborted_at = mesh[0]
        raise TraceAborted(curve, mesh[0], exc) from exc
    curve.records.append(prev)
    for target in mesh[1:]:
        try:
            prev = _bisecting_step(problem, prev, k_free, sig_for, target, max_bisections, newton_kw)
        except _SOLVE_FAILURES as exc:
            curve.aborted_at = target
            raise TraceAborted(curve, target, exc) from exc
        curve.records.append(prev)
    return curve


def _bisecting_step(problem, start: SolutionRecord, k_free: int, sig_for, target: float, max_depth: int, kw,
                    depth: int = 0) -> SolutionRecord:
    sig = sig_for(target)
    try:
        return newton_solve(problem, sig, _shift_signature(start.u, start.xi, sig), **kw)
    except _SOLVE_FAILURES:
        if depth >= max_depth:
            raise
    mid = 0.5 * (start.xi[k_free] + target)
    half = _bisecting_step(problem, start, k_free, sig_for, mid, max_depth, kw, depth + 1)
    return _bisecting_step(problem, half, k_free, sig_for, target, max_depth, kw, depth + 1)


def solve_for_mu(curve: SolutionCurve, mu_target: float, tol: float = MU_TOL, max_iter: int = 80,
                 **newton_kw) -> list[SolutionRecord]:
    """All solutions of mu_{k_free}(xi) = mu_target found on the traced range.

    Each sign change of mu - mu_target between consecutive records is
    refined by bisection on xi.  A record exactly on the target is returned
    as is.  Touching the target without crossing it is not detected.
    """
    problem, k = curve.problem, curve.k_free
    recs = curve.records
    t = float(mu_target)
    f = [r.mu[k] - t for r in recs]
    found: list[SolutionRecord] = []
    for i, r in enumerate(recs):
        if f[i] == 0.0:
            if not (found and found[-1] is recs[i - 1] and i > 0 and f[i - 1] == 0.0):
                found.append(r)
            continue
        if i + 1 < len(recs) and f[i] * f[i + 1] < 0.0:
            root = _bisect(problem, curve, recs[i], recs[i + 1], t, tol, max_iter, newton_kw)
            if root is not None:
                found.append(root)
    return found


def _bisect(problem, curve, left: SolutionRecord, right: SolutionRecord, t: float, tol: float, max_iter: int, kw):
    k = curve.k_free
    a, b = left.xi[k], right.xi[k]
    fa = left.mu[k] - t
    ua, ub = left, right
    best = None
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        sig = curve.signature(m)
        # the average of two functions with signatures a and b has signature m exactly
        guess = GridFunction(problem.grid, 0.5 * (ua.u.values + ub.u.values))
        try:
            rec = newton_solve(problem, sig, guess, **kw)
        except _SOLVE_FAILURES:
            try:
                rec = newton_solve(problem, sig, **kw)
            except _SOLVE_FAILURES as exc:
                warnings.warn(f"bracket [{a:.6g}, {b:.6g}] abandoned: {exc}", RuntimeWarning, stacklevel=3)
                return None
        fm = rec.mu[k] - t
        if best is None or abs(fm) < abs(best.mu[k] - t):
            best = rec
        if abs(fm) <= tol:
            return rec
        if (fm < 0.0) == (fa < 0.0):
            a, fa, ua = m, fm, rec
        else:
            b, ub = m, rec
        if b == a or abs(b - a) <= 4 * np.finfo(float).eps * max(abs(a), abs(b)):
            break
    warnings.warn(f"bisection stopped with |mu - target| = {abs(best.mu[k] - t):.3g}", RuntimeWarning, stacklevel=3)
    return best


def homotopy_in_k(base: ProblemSpec, g0: str, g1: str, xi: Mapping[int, float], k_to: float = 1.0,
                  k_from: float = 0.0, dk: float = 0.1, **newton_kw) -> HomotopyCurve:
    """Follow solutions of u'' + G0(u) + k G1(u) = sum mu phi + e at fixed ``xi``.

    ``base`` supplies the grid, forcing and harmonics; its own nonlinearity
    is ignored.  A :class:`SpectralWarning` is issued when G0 + k_to G1
    violates the uniqueness window, but the march is still attempted.
    """
    if not dk or not math.isfinite(dk):
        raise ValueError(f"dk must be finite and nonzero, got {dk!r}")
    xi = {int(k): float(v) for k, v in xi.items()}

    def problem_at(k):
        return base.with_nonlinearity(f"({g0}) + ({float(k)!r})*({g1})", f"{base.name}@k={k:g}")

    final = problem_at(k_to)
    report = check_spectral_condition(final.nonlinearity, base.harmonics, length=base.length)
    if not report.passed:
        warnings.warn(f"G0 + {k_to:g} G1 fails the spectral condition: {'; '.join(report.notes)}",
                      SpectralWarning, stacklevel=2)

    span = float(k_to) - float(k_from)
    step = math.copysign(abs(float(dk)), span) if span else abs(float(dk))
    n = int(math.floor(abs(span) / abs(step) + 1e-9))
    ks = [float(k_from) + i * step for i in range(n + 1)]
    if abs(ks[-1] - k_to) > 1e-9 * abs(step):
        ks.append(float(k_to))
    else:
        ks[-1] = float(k_to)

    out = HomotopyCurve(base, xi, [], [], report)
    prev = None
    for k in ks:
        p = final if k == k_to else problem_at(k)
        try:
            rec = newton_solve(p, xi, None if prev is None else prev.u, **newton_kw)
        except _SOLVE_FAILURES as exc:
            curve = SolutionCurve(base, base.harmonics[0], out.records, step, dict(xi), _metadata(base, newton_kw), k)
            raise TraceAborted(curve, k, exc) from exc
        out.ks.append(k)
        out.records.append(rec)
        prev = rec
    return out


def _as_vector(problem: ProblemSpec, values) -> np.ndarray:
    if isinstance(values, Mapping):
        if set(int(k) for k in values) != set(problem.harmonics):
            raise ValueError(f"target keys {sorted(values)} do not match harmonics {list(problem.harmonics)}")
        return np.array([float(values[k]) for k in problem.harmonics])
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.shape != (len(problem.harmonics),):
        raise ValueError(f"expected {len(problem.harmonics)} target values, got {arr.shape}")
    return arr


def find_signature_for_target(problem: ProblemSpec, mu_target, xi0=None, *, tol: float = 1e-8,
                              max_iter: int = 40, singular_rtol: float = 1e-7, cond_max: float = 1e8,
                              relaxation: float = 0.5, **newton_kw) -> SolutionRecord:
    """Find a signature xi with mu(xi) = mu_target.

    Quasi-Newton on xi -> mu with a forward-difference Jacobian, one warm
    Newton solve per column.  When the Jacobian is badly conditioned the step
    falls back to the relaxed fixed-point map
    ``xi <- xi + relaxation * D (mu_target - mu(xi))`` with D the inverse of
    the diagonal Jacobian of the linearized problem.  The Jacobian is always
    checked at the start, so a degenerate map is reported even if the
    initial guess already meets the target.
    """
    H = problem.harmonics
    t = _as_vector(problem, mu_target)
    x = np.zeros(len(H)) if xi0 is None else _as_vector(problem, xi0)
    L = problem.length

    def sig(v):
        return {k: float(c) for k, c in zip(H, v)}

    def evaluate(v, warm: SolutionRecord | None):
        guess = None if warm is None else _shift_signature(warm.u, warm.xi, sig(v))
        rec = newton_solve(problem, sig(v), guess, **newton_kw)
        return rec, np.array([rec.mu[k] for k in H]) - t

    d0 = problem.nonlinearity.eval_with_derivative(0.0)[1]
    k_res = min(H, key=lambda k: abs(eigenvalue(k, L) - d0))
    D = np.array([L / 2.0 if k == k_res else (L / 2.0) / (eigenvalue(k_res, L) - eigenvalue(k, L)) for k in H])

    try:
        rec, F = evaluate(x, None)
    except _SOLVE_FAILURES as exc:
        raise OuterNoConvergence(f"inner solve failed at the initial signature: {exc}", []) from exc
    iterates = [(x.copy(), F.copy())]
    for it in range(max_iter):
        J = np.empty((len(H), len(H)))
        for j in range(len(H)):
            delta = 1e-5 * (1.0 + abs(x[j]))
            xp = x.copy()
            xp[j] += delta
            try:
                _, Fp = evaluate(xp, rec)
            except _SOLVE_FAILURES as exc:
                raise OuterNoConvergence(f"inner solve failed while differencing: {exc}", iterates) from exc
            J[:, j] = (Fp - F) / delta
        s = np.linalg.svd(J, compute_uv=False)
        if s[-1] <= singular_rtol * max(1.0, s[0]):
            raise SingularOuterJacobian(s, x.copy())
        if np.max(np.abs(F)) <= tol:
            return rec
        if s[0] / s[-1] > cond_max:
            dx = relaxation * D * (-F)
        else:
            dx = np.linalg.solve(J, -F)
        norm0 = np.max(np.abs(F))
        for _ in range(10):
            try:
                cand, Fc = evaluate(x + dx, rec)
                if np.max(np.abs(Fc)) < norm0:
                    break
            except _SOLVE_FAILURES:
                pass
            dx = 0.5 * dx
        else:
            raise OuterNoConvergence(f"no decrease of |mu - target| from xi={x.tolist()}", iterates)
        x, rec, F = x + dx, cand, Fc
        iterates.append((x.copy(), F.copy()))
        if np.max(np.abs(F)) <= tol:
            return rec
    raise OuterNoConvergence(f"outer iteration did not reach |mu - target| <= {tol:g} in {max_iter} steps", iterates)
