"""Problem container: one instance of the penalized inverse problem."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fidelity import Constraint, FidelitySpec, Kind


@dataclass(frozen=True)
class ProblemSpec:
    """min over x in C^N of F_y(A x) + lambda0 ||x||_0 + (lambda2/2) ||x||_2^2."""

    fidelity: FidelitySpec
    A: np.ndarray
    lambda0: float
    lambda2: float = 0.0
    constraint: Constraint = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        object.__setattr__(self, "A", A)
        if A.shape[0] != self.fidelity.m:
            raise ValueError("A has %d rows but y has %d entries" % (A.shape[0], self.fidelity.m))
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if self.lambda2 < 0:
            raise ValueError("lambda2 must be nonnegative")
        constraint = self.constraint
        if constraint is None:
            constraint = Constraint.NONNEG if self.fidelity.kind is Kind.KL else Constraint.REALS
        object.__setattr__(self, "constraint", constraint)
        if self.fidelity.kind is Kind.KL:
            if self.constraint is not Constraint.NONNEG:
                raise ValueError("KL problems require the nonnegativity constraint")
            if np.any(A < 0.0):
                raise ValueError("KL problems require an entrywise nonnegative A")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.A[:, j]
