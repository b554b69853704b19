"""Proximal gradient descent on the relaxed or raw counting objective.

One iteration is a gradient step on the smooth part H(x) = F_y(Ax) +
(lambda2/2)||x||^2 followed by the penalty prox and projection.  The step is
either a fixed rho < 1/L or a backtracking search on the standard quadratic
upper model of H.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import fidelity as fid
from .errors import DomainError
from .fidelity import Constraint
from .generating import RelaxationSpec
from .prox import ProxOperator, hard_threshold, make_prox
from .problem import ProblemSpec


class StopReason(enum.Enum):
    TOLERANCE = "tolerance"
    MAX_ITER = "max_iter"
    DOMAIN_ERROR = "domain_error"


@dataclass(frozen=True)
class Fixed:
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class Backtracking:
    rho0: float | None = None      # None -> 10/L at solve time
    shrink: float = 0.5
    growth: float = 1.25
    decrease_slack: float = 1e-12  # absolute slack on the quadratic-model test

    def __post_init__(self):
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if self.growth < 1.0:
            raise ValueError("growth must be >= 1")


@dataclass(frozen=True)
class SolverConfig:
    step: Fixed | Backtracking = field(default_factory=Backtracking)
    max_iter: int = 5000
    rel_tol: float = 1e-6
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class SolveResult:
    x: np.ndarray
    j_psi: np.ndarray
    j_0: np.ndarray
    steps: np.ndarray
    deltas: np.ndarray
    stop_reason: StopReason
    iterations: int

    def trace_rows(self):
        """(iter, J_psi, J_0, step, delta) rows for CSV emission."""
        for k in range(self.iterations):
            yield k, self.j_psi[k], self.j_0[k], self.steps[k], self.deltas[k]


def objective_J0(problem: ProblemSpec, x) -> float:
    """F_y(Ax) + lambda0 * #nonzeros + (lambda2/2)||x||^2; exact-zero counting."""
    x = np.asarray(x, dtype=float)
    val = fid.F_value(problem.fidelity, problem.A @ x)
    val += problem.lambda0 * float(np.count_nonzero(x))
    val += 0.5 * problem.lambda2 * float(x @ x)
    return val


def objective_JPsi(problem: ProblemSpec, relaxation: RelaxationSpec, x) -> float:
    """F_y(Ax) + sum_n beta_n(x_n) + (lambda2/2)||x||^2."""
    x = np.asarray(x, dtype=float)
    val = fid.F_value(problem.fidelity, problem.A @ x)
    val += make_prox(relaxation).penalty_value(x)
    val += 0.5 * problem.lambda2 * float(x @ x)
    return val


def _smooth_value(problem: ProblemSpec, x) -> float:
    return fid.F_value(problem.fidelity, problem.A @ x) \
        + 0.5 * problem.lambda2 * float(x @ x)


def _backward(problem: ProblemSpec, prox_op: ProxOperator | None, rho: float, v):
    if prox_op is None:
        u = hard_threshold(v, rho, problem.lambda0)
        if problem.constraint is Constraint.NONNEG:
            u = np.maximum(u, 0.0)
        return u
    return prox_op(rho, v)


def pga_step(problem: ProblemSpec, penalty, rho: float, x: np.ndarray) -> np.ndarray:
    """One forward-backward step; penalty is a RelaxationSpec or the string 'l0'."""
    x = np.asarray(x, dtype=float)
    grad, _ = fid.grad_F(problem.fidelity, problem.A, x)
    v = x - rho * (grad + problem.lambda2 * x)
    prox_op = None if _is_l0(penalty) else make_prox(penalty)
    return _backward(problem, prox_op, rho, v)


def _is_l0(penalty) -> bool:
    return isinstance(penalty, str) and penalty.lower() == "l0"


def solve(problem: ProblemSpec, penalty, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Run proximal gradient descent until the iterate stalls or max_iter.

    penalty: RelaxationSpec for the relaxed objective, or "l0" for the raw
    counting penalty (backward map = hard threshold + projection).
    """
    l0_mode = _is_l0(penalty)
    prox_op = None if l0_mode else make_prox(penalty)
    x = np.zeros(problem.n) if config.x0 is None else np.asarray(config.x0, dtype=float).copy()

    L = fid.lipschitz_L(problem.fidelity, problem.A, problem.lambda2)
    if isinstance(config.step, Fixed):
        rho = config.step.rho
        if L > 0 and rho >= 1.0 / L:
            raise ValueError(f"fixed step rho={rho} must be < 1/L = {1.0 / L}")
        rho_cap = rho
        backtrack = None
    else:
        backtrack = config.step
        rho_cap = backtrack.rho0 if backtrack.rho0 is not None else (10.0 / L if L > 0 else 1.0)
        rho = rho_cap

    def penalty_value(z) -> float:
        if l0_mode:
            return problem.lambda0 * float(np.count_nonzero(z))
        return prox_op.penalty_value(z)

    j_psi, j_0, steps, deltas = [], [], [], []
    stop = StopReason.MAX_ITER
    it = 0
    try:
        h_x = _smooth_value(problem, x)
    except DomainError as exc:
        raise DomainError(f"initial point violates the data-term domain: {exc}") from exc

    for it in range(1, config.max_iter + 1):
        grad, _ = fid.grad_F(problem.fidelity, problem.A, x)
        g_full = grad + problem.lambda2 * x

        if backtrack is None:
            x_new = _backward(problem, prox_op, rho, x - rho * g_full)
            try:
                h_new = _smooth_value(problem, x_new)
            except DomainError:
                stop = StopReason.DOMAIN_ERROR
                break
        else:
            accepted = False
            for _ in range(60):
                x_new = _backward(problem, prox_op, rho, x - rho * g_full)
                d = x_new - x
                try:
                    h_new = _smooth_value(problem, x_new)
                except DomainError:
                    rho *= backtrack.shrink
                    continue
                model = h_x + float(g_full @ d) + float(d @ d) / (2.0 * rho)
                if h_new <= model + backtrack.decrease_slack * max(1.0, abs(h_x)):
                    accepted = True
                    break
                rho *= backtrack.shrink
            if not accepted:
                stop = StopReason.DOMAIN_ERROR
                break

        delta = float(np.linalg.norm(x_new - x))
        j_psi.append(h_new + penalty_value(x_new))
        j_0.append(h_new + problem.lambda0 * float(np.count_nonzero(x_new)))
        steps.append(rho)
        deltas.append(delta)

        stalled = delta < config.rel_tol * max(1.0, float(np.linalg.norm(x)))
        x, h_x = x_new, h_new
        if backtrack is not None:
            rho = min(rho * backtrack.growth, rho_cap)
        if stalled:
            stop = StopReason.TOLERANCE
            break

    return SolveResult(
        x=x,
        j_psi=np.asarray(j_psi),
        j_0=np.asarray(j_0),
        steps=np.asarray(steps),
        deltas=np.asarray(deltas),
        stop_reason=stop,
        iterations=len(deltas),
    )
