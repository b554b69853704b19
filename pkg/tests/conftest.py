import numpy as np
import pytest

from brexopt.fidelity import FidelitySpec, Kind
from brexopt.problem import ProblemSpec


@pytest.fixture
def fig_ls():
    """2x2 least-squares landscape with four known minimizers."""
    A = np.array([[3.0, 1.0], [1.0, 3.0]])
    y = np.array([1.0, 2.0])
    return ProblemSpec(FidelitySpec(Kind.LS, y), A, lambda0=0.5)


@pytest.fixture
def fig_lr():
    A = np.array([[-1.0, 2.0], [2.0, 0.2]])
    y = np.array([1.0, 0.0])
    return ProblemSpec(FidelitySpec(Kind.LR, y), A, lambda0=1.0, lambda2=0.1)


@pytest.fixture
def fig_kl():
    A = np.array([[0.45, 0.8], [0.85, 0.25]])
    y = np.array([0.2, 0.2])
    b = 0.1
    f0 = float(np.sum(b - y * np.log(b)))
    return ProblemSpec(FidelitySpec(Kind.KL, y, b=b), A, lambda0=0.06 * f0)


def random_problem(kind: Kind, rng: np.random.Generator, m: int, n: int,
                   lambda0: float | None = None, lambda2: float | None = None,
                   y_max: float = 2.0) -> ProblemSpec:
    """Small random instance with a valid domain for the given data term."""
    if kind is Kind.KL:
        A = np.abs(rng.standard_normal((m, n)))
        y = rng.uniform(0.05, y_max, size=m)
        spec = FidelitySpec(kind, y, b=0.2)
        lam2 = 0.0 if lambda2 is None else lambda2
    elif kind is Kind.LR:
        A = rng.standard_normal((m, n))
        y = (rng.uniform(size=m) < 0.5).astype(float)
        spec = FidelitySpec(kind, y)
        lam2 = 0.1 if lambda2 is None else lambda2
    else:
        A = rng.standard_normal((m, n))
        y = rng.standard_normal(m)
        spec = FidelitySpec(kind, y)
        lam2 = 0.0 if lambda2 is None else lambda2
    if lambda0 is None:
        lambda0 = float(rng.uniform(0.05, 0.5))
    return ProblemSpec(spec, A, lambda0=lambda0, lambda2=lam2)
