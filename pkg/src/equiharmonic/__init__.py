"""Equiharmonic solution curves for resonant semilinear two-point problems.

Solves u'' + G(u) = sum_{k in H} mu_k sin(k pi x/L) + e(x) on (0, L) with
u(0) = u(L) = 0, where the projections xi_k = int u sin(k pi x/L) dx are
prescribed and the coefficients mu_k are computed.
"""

from .continuation import (
    HomotopyCurve,
    OuterNoConvergence,
    SingularOuterJacobian,
    SolutionCurve,
    SpectralWarning,
    TraceAborted,
    find_signature_for_target,
    homotopy_in_k,
    solve_for_mu,
    trace_curve,
)
from .expression import DomainError, Expression, ExpressionError, ParseError, parse
from .grid import Grid, GridFunction, eigenpair, harmonic_projection, integrate
from .ivp import IntegrationOverflow, integrate_linear, integrate_nonlinear
from .linear import LinearSolution, SingularSystem, SpectralReport, check_spectral_condition, solve_constrained
from .newton import (
    ForcingNotOrthogonal,
    NoConvergence,
    ProblemSpec,
    SolutionRecord,
    newton_solve,
    projected_mu_identity,
    residual_sup,
)
from .problems import BuiltinProblem, UnknownProblem, get_builtin, list_builtins
from .verify import VerificationReport, verify_by_reintegration

__version__ = "0.1.0"

__all__ = [
    "Grid", "GridFunction", "integrate", "harmonic_projection", "eigenpair",
    "Expression", "ExpressionError", "ParseError", "DomainError", "parse",
    "integrate_linear", "integrate_nonlinear", "IntegrationOverflow",
    "solve_constrained", "LinearSolution", "SingularSystem", "check_spectral_condition", "SpectralReport",
    "ProblemSpec", "SolutionRecord", "newton_solve", "residual_sup", "projected_mu_identity",
    "NoConvergence", "ForcingNotOrthogonal",
    "trace_curve", "solve_for_mu", "homotopy_in_k", "find_signature_for_target",
    "SolutionCurve", "HomotopyCurve", "TraceAborted", "OuterNoConvergence", "SingularOuterJacobian",
    "SpectralWarning",
    "BuiltinProblem", "get_builtin", "list_builtins", "UnknownProblem",
    "verify_by_reintegration", "VerificationReport",
]
