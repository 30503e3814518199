"""Independent check of a computed solution by reintegration.

Only the initial slope u'(0) and the coefficients mu of a solution are
used: the full nonlinear equation is integrated from (0, u'(0)) and the far
boundary value and the signature of the result are compared with the record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .expression import DomainError
from .grid import harmonic_projection
from .ivp import IntegrationOverflow, integrate_nonlinear
from .newton import ProblemSpec, SolutionRecord

__all__ = ["VerificationReport", "verify_by_reintegration", "verify_initial_data", "VERIFY_RTOL"]

VERIFY_RTOL = 1e-5


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    endpoint: float
    max_deviation: float
    signature_defects: dict[int, float] = field(default_factory=dict)
    error: str = ""

    def __str__(self):
        if self.error:
            return f"FAIL ({self.error})"
        defects = ", ".join(f"{k}:{d:.3g}" for k, d in self.signature_defects.items())
        dev = "n/a" if math.isnan(self.max_deviation) else f"{self.max_deviation:.3g}"
        return (f"{'pass' if self.passed else 'FAIL'} |v(L)|={self.endpoint:.3g} "
                f"max|v-u|={dev} signature defects {{{defects}}}")


def verify_initial_data(problem: ProblemSpec, xi: Mapping[int, float], mu: Mapping[int, float], uprime0: float,
                        u=None, sup_norm_u: float | None = None, rtol: float = VERIFY_RTOL) -> VerificationReport:
    """Reintegrate from (0, uprime0) and compare with the stored signature.

    ``u`` (a GridFunction) is optional; without it ``sup_norm_u`` scales the
    boundary tolerance and the pointwise deviation is reported as NaN.
    """
    try:
        v = integrate_nonlinear(problem.nonlinearity, problem.forcing, mu, 0.0, uprime0).u
    except (IntegrationOverflow, DomainError) as exc:
        return VerificationReport(False, math.inf, math.inf, {}, f"reintegration failed: {exc}")
    if u is not None:
        sup = u.sup_norm()
        deviation = float(np.max(np.abs(v.values - u.values)))
    else:
        sup = v.sup_norm() if sup_norm_u is None else float(sup_norm_u)
        deviation = math.nan
    endpoint = abs(float(v.values[-1]))
    defects = {int(k): abs(harmonic_projection(v, int(k)) - float(x)) for k, x in xi.items()}
    passed = endpoint <= rtol * (1.0 + sup) and all(
        d <= rtol * (1.0 + abs(float(xi[k]))) for k, d in defects.items())
    return VerificationReport(passed, endpoint, deviation, defects)


def verify_by_reintegration(record: SolutionRecord, problem: ProblemSpec,
                            rtol: float = VERIFY_RTOL) -> VerificationReport:
    return verify_initial_data(problem, record.xi, record.mu, record.uprime0, u=record.u, rtol=rtol)
