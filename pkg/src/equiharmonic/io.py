"""Problem files and curve persistence (CSV and JSON).

Problem files are JSON objects::

    {"nonlinearity": "u + u/sqrt(u^2+1)", "forcing": "5*sin(2*x)",
     "harmonics": [1], "length": 3.14159..., "n_intervals": 1024,
     "tolerances": {"step_tol": 1e-10, "residual_tol": 1e-6, "max_iter": 12},
     "dxi": 0.5, "name": "mine"}

Only ``nonlinearity`` and ``forcing`` are required.  Floats are written with
17 significant digits so that a round trip reproduces every double.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .continuation import SolutionCurve
from .newton import ProblemSpec
from .problems import BUILTINS, UnknownProblem, get_builtin

__all__ = [
    "ProblemFileError",
    "LoadedProblem",
    "load_problem",
    "problem_to_dict",
    "write_curve_csv",
    "write_curve_json",
    "read_curve_json",
    "StoredRecord",
    "StoredCurve",
    "CURVE_FORMAT",
]

CURVE_FORMAT = "equiharmonic-curve"
CURVE_VERSION = 1
_TOLERANCE_KEYS = ("step_tol", "residual_tol", "max_iter")
_PROBLEM_KEYS = {"nonlinearity", "forcing", "harmonics", "length", "n_intervals", "tolerances", "dxi", "name"}


class ProblemFileError(ValueError):
    pass


@dataclass
class LoadedProblem:
    problem: ProblemSpec
    newton_kw: dict = field(default_factory=dict)
    dxi: float | None = None


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def load_problem(ref: str, n_intervals: int | None = None) -> LoadedProblem:
    """Resolve a builtin name or a path to a JSON problem file."""
    if ref in BUILTINS:
        return LoadedProblem(get_builtin(ref, n_intervals or 1024))
    path = Path(ref)
    if not path.is_file():
        if os.sep in ref or ref.endswith(".json"):
            raise ProblemFileError(f"problem file not found: {ref}")
        raise UnknownProblem(ref)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFileError(f"cannot read problem file {ref}: {exc}") from exc
    return problem_from_dict(data, n_intervals, default_name=path.stem)


def problem_from_dict(data: Any, n_intervals: int | None = None, default_name: str = "custom") -> LoadedProblem:
    if not isinstance(data, dict):
        raise ProblemFileError("problem file must hold a JSON object")
    unknown = set(data) - _PROBLEM_KEYS
    if unknown:
        raise ProblemFileError(f"unknown problem keys: {', '.join(sorted(unknown))}")
    for key in ("nonlinearity", "forcing"):
        if not isinstance(data.get(key), str):
            raise ProblemFileError(f"'{key}' must be an expression string")
    harmonics = data.get("harmonics", [1])
    if not isinstance(harmonics, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in harmonics):
        raise ProblemFileError("'harmonics' must be a list of positive integers")
    tolerances = data.get("tolerances", {})
    if not isinstance(tolerances, dict) or set(tolerances) - set(_TOLERANCE_KEYS):
        raise ProblemFileError(f"'tolerances' may only contain {', '.join(_TOLERANCE_KEYS)}")
    n = n_intervals or data.get("n_intervals", 1024)
    try:
        spec = ProblemSpec.from_expressions(
            data["nonlinearity"], data["forcing"], tuple(harmonics), float(data.get("length", math.pi)),
            int(n), str(data.get("name", default_name)))
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(str(exc)) from exc
    dxi = data.get("dxi")
    return LoadedProblem(spec, dict(tolerances), None if dxi is None else float(dxi))


def problem_to_dict(problem: ProblemSpec) -> dict:
    return {
        "name": problem.name,
        "nonlinearity": problem.nonlinearity.source,
        "forcing": problem.forcing_source,
        "harmonics": list(problem.harmonics),
        "length": problem.length,
        "n_intervals": problem.grid.n_intervals,
    }


def csv_header(curve: SolutionCurve) -> list[str]:
    return ["xi"] + [f"mu_{k}" for k in curve.problem.harmonics] + [
        "uprime0", "sup_norm_u", "residual_sup", "newton_iterations"]


def write_curve_csv(curve: SolutionCurve, path) -> None:
    """One row per record; a trailing comment marks an aborted trace."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(curve))
        for r in curve.records:
            w.writerow([_fmt(r.xi[curve.k_free])] + [_fmt(r.mu[k]) for k in curve.problem.harmonics]
                       + [_fmt(r.uprime0), _fmt(r.sup_norm_u), _fmt(r.residual_sup), str(r.newton_iterations)])
        if curve.aborted_at is not None:
            fh.write(f"# ABORTED at xi={_fmt(curve.aborted_at)}\n")


def write_curve_json(curve: SolutionCurve, path, full: bool = False) -> None:
    records = []
    for r in curve.records:
        item = {
            "xi": {str(k): v for k, v in r.xi.items()},
            "mu": {str(k): v for k, v in r.mu.items()},
            "uprime0": r.uprime0,
            "sup_norm_u": r.sup_norm_u,
            "residual_sup": r.residual_sup,
            "newton_iterations": r.newton_iterations,
        }
        if full:
            item["u"] = r.u.values.tolist()
        records.append(item)
    doc = {
        "format": CURVE_FORMAT,
        "version": CURVE_VERSION,
        "problem": problem_to_dict(curve.problem),
        "fingerprint": curve.problem.fingerprint(),
        "k_free": curve.k_free,
        "fixed": {str(k): v for k, v in curve.fixed.items()},
        "dxi": curve.dxi,
        "metadata": curve.metadata,
        "aborted_at": curve.aborted_at,
        "records": records,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


@dataclass(frozen=True)
class StoredRecord:
    xi: dict[int, float]
    mu: dict[int, float]
    uprime0: float
    sup_norm_u: float
    residual_sup: float
    newton_iterations: int
    u: np.ndarray | None = None


@dataclass
class StoredCurve:
    problem: dict
    fingerprint: str
    k_free: int
    n_intervals: int
    records: list[StoredRecord]
    aborted_at: float | None = None


def _int_keys(d, what: str) -> dict[int, float]:
    if not isinstance(d, dict):
        raise ProblemFileError(f"record field '{what}' must be an object")
    return {int(k): float(v) for k, v in d.items()}


def read_curve_json(path) -> StoredCurve:
    """Load a curve written by :func:`write_curve_json`; raises ProblemFileError if malformed."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProblemFileError(f"cannot read curve file {path}: {exc}") from exc
    try:
        if doc.get("format") != CURVE_FORMAT:
            raise ProblemFileError(f"{path} is not an {CURVE_FORMAT} file")
        records = []
        for item in doc["records"]:
            u = item.get("u")
            records.append(StoredRecord(
                _int_keys(item["xi"], "xi"), _int_keys(item["mu"], "mu"), float(item["uprime0"]),
                float(item["sup_norm_u"]), float(item["residual_sup"]), int(item["newton_iterations"]),
                None if u is None else np.asarray(u, dtype=float)))
        n = int(doc["metadata"]["n_intervals"])
        aborted = doc.get("aborted_at")
        return StoredCurve(dict(doc["problem"]), str(doc["fingerprint"]), int(doc["k_free"]), n, records,
                           None if aborted is None else float(aborted))
    except ProblemFileError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ProblemFileError(f"malformed curve file {path}: {exc!r}") from exc
