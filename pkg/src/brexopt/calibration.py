"""Curvature calibration: per-coordinate thresholds gamma_hat that make the
relaxation exact.

The driving inequality decouples the penalty from the data term:

    inf psi_n'' over the sublevel interval  >  lambda2 + sum_m a_mn^2 sup f''

Closed-form thresholds exist for the power/Shannon/shifted-log families;
`generic_threshold` solves the same inequality by monotone bisection on gamma
and is the fallback for fidelity-matched generators (and the cross-check for
the closed forms).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from . import fidelity as fid
from .errors import CalibrationError, ConvergenceError
from .fidelity import Constraint, Kind
from .generating import (Generator, KLGenerator, MatchedGenerator,
                         PowerGenerator, RelaxationSpec, ShannonGenerator)
from .problem import ProblemSpec
from .special import lambert_w0


class Mode(enum.Enum):
    AT_THRESHOLD = "at_threshold"
    STRICT = "strict"


@dataclass(frozen=True)
class GeneratorKind:
    """What family to build, before gamma is known."""

    name: str                 # "power" | "shannon" | "klgen" | "matched"
    p: float = 2.0            # power exponent
    y: float = 1.0            # klgen numerator
    b: float | None = None    # klgen / matched offset; None -> problem's b
    a: float = 1.0            # matched scale
    row: int = 0              # matched fidelity row (y taken from the data)

    @staticmethod
    def power(p: float = 2.0) -> "GeneratorKind":
        return GeneratorKind("power", p=p)

    @staticmethod
    def shannon() -> "GeneratorKind":
        return GeneratorKind("shannon")

    @staticmethod
    def klgen(y: float = 1.0, b: float | None = None) -> "GeneratorKind":
        return GeneratorKind("klgen", y=y, b=b)

    @staticmethod
    def matched(a: float = 1.0, row: int = 0) -> "GeneratorKind":
        return GeneratorKind("matched", a=a, row=row)


@dataclass(frozen=True)
class CalibrationReport:
    gamma_thr: np.ndarray
    gamma: np.ndarray
    mode: Mode
    margin: float
    exact: np.ndarray
    column_norms: np.ndarray

    def to_json(self) -> str:
        return json.dumps({
            "schema": 1,
            "mode": self.mode.value,
            "margin": self.margin,
            "gamma_thr": self.gamma_thr.tolist(),
            "gamma": self.gamma.tolist(),
            "exact": [bool(e) for e in self.exact],
            "column_norms": self.column_norms.tolist(),
        })


def _rhs(problem: ProblemSpec, n: int) -> float:
    """lambda2 + sum_m a_mn^2 sup f''(.; y_m)."""
    a = problem.column(n)
    sup = fid.curvature_sup(problem.fidelity.kind, problem.fidelity.y, problem.fidelity.b)
    return problem.lambda2 + float(np.sum(a**2 * sup))


def gamma_threshold(problem: ProblemSpec, kind: GeneratorKind, n: int) -> float:
    """Closed-form curvature threshold for coordinate n; 0 for a zero column."""
    a = problem.column(n)
    if not np.any(a):
        return 0.0
    lam0, lam2 = problem.lambda0, problem.lambda2
    fk = problem.fidelity.kind
    if kind.name == "power":
        p = kind.p
        r = _rhs(problem, n)
        return (p * lam0) ** ((2.0 - p) / 2.0) * r ** (p / 2.0)
    if kind.name == "shannon":
        if fk is not Kind.KL:
            raise CalibrationError("shannon generators pair with KL data terms only")
        return math.sqrt(lam0 * _rhs(problem, n))
    if kind.name == "klgen":
        if fk is not Kind.KL:
            raise CalibrationError("shifted-log generators pair with KL data terms only")
        b = problem.fidelity.b if kind.b is None else kind.b
        target = _rhs(problem, n) * b**2

        def lhs(gamma: float) -> float:
            kappa = lam0 / (kind.y * gamma) + math.log(b) + 1.0
            w = lambert_w0(-b * math.exp(-kappa))
            return gamma * kind.y * w**2

        lo, hi = 1e-8, 1.0
        for _ in range(200):
            if lhs(hi) >= target:
                break
            hi *= 2.0
        else:
            raise ConvergenceError("no bracket for the shifted-log threshold")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if lhs(mid) >= target:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-10 * hi:
                break
        return hi
    raise CalibrationError(f"no closed-form threshold for generator kind {kind.name!r}")


def _build_generator(problem: ProblemSpec, kind: GeneratorKind, gamma: float) -> Generator:
    if kind.name == "power":
        return PowerGenerator(p=kind.p, gamma=gamma, lambda0=problem.lambda0,
                              constraint=problem.constraint)
    if kind.name == "shannon":
        return ShannonGenerator(gamma=gamma, lambda0=problem.lambda0)
    if kind.name == "klgen":
        b = problem.fidelity.b if kind.b is None else kind.b
        return KLGenerator(y=kind.y, b=b, gamma=gamma, lambda0=problem.lambda0)
    if kind.name == "matched":
        return MatchedGenerator(kind=problem.fidelity.kind,
                                y=float(problem.fidelity.y[kind.row]),
                                a=kind.a, gamma=gamma, lambda0=problem.lambda0,
                                b=problem.fidelity.b, lambda2=problem.lambda2,
                                constraint=problem.constraint)
    raise CalibrationError(f"unknown generator kind {kind.name!r}")


def generic_threshold(problem: ProblemSpec, kind: GeneratorKind, n: int) -> float:
    """Smallest gamma whose inf-curvature over its own sublevel interval beats the data curvature."""
    a = problem.column(n)
    if not np.any(a):
        return 0.0
    target = _rhs(problem, n)

    def excess(gamma: float) -> float:
        return _build_generator(problem, kind, gamma).inf_curvature() - target

    lo, hi = 1e-12, 1.0
    for _ in range(200):
        if excess(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("no bracket for the curvature threshold")
    if excess(lo) >= 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-10 * hi:
            break
    return hi


def calibrate(problem: ProblemSpec, kind: GeneratorKind, mode: Mode = Mode.AT_THRESHOLD,
              margin: float = 0.0) -> tuple[RelaxationSpec, CalibrationReport]:
    """Pick gamma_n per coordinate and assemble the relaxation family.

    AT_THRESHOLD reproduces the boundary choice gamma = gamma_hat; STRICT
    inflates it by (1 + margin).  Zero columns get no generator: the
    coordinate keeps the raw counting penalty.
    """
    if mode is Mode.STRICT and margin < 0:
        raise ValueError("strict mode needs margin >= 0")
    n = problem.n
    gamma_thr = np.zeros(n)
    for j in range(n):
        if kind.name == "matched":
            gamma_thr[j] = generic_threshold(problem, kind, j)
        else:
            gamma_thr[j] = gamma_threshold(problem, kind, j)
    factor = 1.0 + (margin if mode is Mode.STRICT else 0.0)
    gamma = gamma_thr * factor
    gens = []
    for j in range(n):
        if gamma[j] <= 0.0:
            gens.append(None)
        else:
            gens.append(_build_generator(problem, kind, float(gamma[j])))
    relaxation = RelaxationSpec(generators=tuple(gens), lambda0=problem.lambda0,
                                constraint=problem.constraint)
    report = CalibrationReport(
        gamma_thr=gamma_thr,
        gamma=gamma,
        mode=mode,
        margin=margin if mode is Mode.STRICT else 0.0,
        exact=gamma >= gamma_thr,
        column_norms=np.sum(problem.A**2, axis=0),
    )
    return relaxation, report


def relaxation_from_gammas(problem: ProblemSpec, kind: GeneratorKind,
                           gamma: np.ndarray) -> RelaxationSpec:
    """Assemble a family from explicit per-coordinate gammas (no exactness claim)."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (problem.n,):
        raise ValueError("gamma must have one entry per column")
    gens = [None if g <= 0 else _build_generator(problem, kind, float(g)) for g in gamma]
    return RelaxationSpec(generators=tuple(gens), lambda0=problem.lambda0,
                          constraint=problem.constraint)
