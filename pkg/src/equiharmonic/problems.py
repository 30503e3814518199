"""Built-in problems: the three resonant examples at lambda_1 and a
resonance-at-lambda_2 demo.

Each nonlinearity already contains the resonant linear term (``u`` or
``4*u``), so the Newton coefficient is simply G'(u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .newton import ProblemSpec

__all__ = ["BuiltinProblem", "BUILTINS", "UnknownProblem", "get_builtin", "list_builtins"]


class UnknownProblem(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown problem {name!r}; available: {', '.join(BUILTINS)}")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class BuiltinProblem:
    name: str
    nonlinearity: str
    forcing: str
    harmonics: tuple[int, ...]
    note: str

    def spec(self, n_intervals: int = 1024) -> ProblemSpec:
        return ProblemSpec.from_expressions(self.nonlinearity, self.forcing, self.harmonics, math.pi,
                                            n_intervals, self.name)


BUILTINS: dict[str, BuiltinProblem] = {
    p.name: p
    for p in (
        BuiltinProblem(
            "fig1",
            "u + 0.2*u^3/(u^2+3*u+3) + sin(u/2)",
            "5*(x - pi/2)",
            (1,),
            "unbounded perturbation at resonance: mu_1 > 0 for large xi > 0, < 0 for large xi < 0, "
            "so mu_1(xi) = 0 somewhere",
        ),
        BuiltinProblem(
            "fig2",
            "u + u/(2*u^2+u+1)",
            "sin(2*x)",
            (1,),
            "bounded g with g(+-inf) = 0: mu_1 -> 0 at both ends; two solutions inside (mu_-, mu_+) "
            "minus {0}, none outside",
        ),
        BuiltinProblem(
            "fig3",
            "u + u/sqrt(u^2+1)",
            "5*sin(2*x) - sin(10*x)",
            (1,),
            "Landesman-Lazer type: mu_1 increases from -4/pi to 4/pi",
        ),
        BuiltinProblem(
            "higher-ev",
            "4*u + u/sqrt(u^2+1)",
            "0",
            (1, 2),
            "resonance at lambda_2 = 4 with f = sin x, i.e. target (mu_1, mu_2) = (1, 0); "
            "solvable since g is bounded with g(+inf) > 0 > g(-inf)",
        ),
    )
}


def get_builtin(name: str, n_intervals: int = 1024) -> ProblemSpec:
    try:
        entry = BUILTINS[name]
    except KeyError:
        raise UnknownProblem(name) from None
    return entry.spec(n_intervals)


def list_builtins() -> list[BuiltinProblem]:
    return list(BUILTINS.values())
