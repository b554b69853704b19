"""Seeded synthetic instance generators for the three data terms.

LS: correlated-Gaussian rows (Toeplitz covariance eta^|i-j|), unit-norm
columns, +-1 spikes, additive Gaussian noise at a target SNR.
LR: the same design, equispaced unit spikes, Bernoulli labels through a
scaled sigmoid.
KL: half-normal design, uniform positive spikes, Poisson counts at a gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fidelity import FidelitySpec, Kind
from .problem import ProblemSpec


@dataclass(frozen=True)
class DataGenConfig:
    kind: Kind
    m: int
    n: int
    k: int                 # spikes in the ground truth
    eta: float = 0.0       # column correlation (LS/LR design)
    tau: float = 8.0       # target SNR in dB (LS)
    s: float = 0.5         # sigmoid scale (LR)
    alpha: float = 50.0    # photon gain (KL)
    b: float = 0.1         # background (KL)
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.k <= self.n):
            raise ValueError("need 1 <= k <= n")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta must lie in [0, 1)")
        if self.alpha <= 0 or self.b <= 0:
            raise ValueError("alpha and b must be positive")


def _correlated_design(rng: np.random.Generator, m: int, n: int, eta: float) -> np.ndarray:
    """Rows ~ N(0, Sigma) with [Sigma]_ij = eta^|i-j|, then unit-norm columns."""
    if eta == 0.0:
        A = rng.standard_normal((m, n))
    else:
        cov = eta ** np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        chol = np.linalg.cholesky(cov + 1e-12 * np.eye(n))
        A = rng.standard_normal((m, n)) @ chol.T
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0.0] = 1.0
    return A / norms


def gen_ls(config: DataGenConfig):
    """Returns (problem-ready A, y, x_true); noise variance set by the SNR target."""
    rng = np.random.default_rng(config.seed)
    A = _correlated_design(rng, config.m, config.n, config.eta)
    x_true = np.zeros(config.n)
    supp = rng.choice(config.n, size=config.k, replace=False)
    signs = np.sign(rng.standard_normal(config.k))
    signs[signs == 0.0] = 1.0
    x_true[supp] = signs
    clean = A @ x_true
    var_total = float(clean @ clean) * 10.0 ** (-config.tau / 10.0)
    noise = rng.standard_normal(config.m) * np.sqrt(var_total / config.m)
    return A, clean + noise, x_true


def gen_lr(config: DataGenConfig):
    """Bernoulli labels through a sigmoid of scaled inner products."""
    rng = np.random.default_rng(config.seed)
    A = _correlated_design(rng, config.m, config.n, config.eta)
    x_true = np.zeros(config.n)
    idx = np.unique(np.round(np.arange(config.k) * config.n / config.k).astype(int))
    idx = idx[idx < config.n]
    x_true[idx] = 1.0
    z = config.s * (A @ x_true)
    prob = 1.0 / (1.0 + np.exp(-z))
    y = (rng.uniform(size=config.m) < prob).astype(float)
    return A, y, x_true


def gen_kl(config: DataGenConfig):
    """Half-normal design, uniform positive spikes, Poisson counts over gain."""
    rng = np.random.default_rng(config.seed)
    A = np.abs(rng.standard_normal((config.m, config.n)))
    x_true = np.zeros(config.n)
    supp = rng.choice(config.n, size=config.k, replace=False)
    x_true[supp] = rng.uniform(size=config.k)
    mean = config.alpha * (A @ x_true + config.b)
    y = rng.poisson(mean).astype(float) / config.alpha
    return A, y, x_true


def generate(config: DataGenConfig):
    if config.kind is Kind.LS:
        return gen_ls(config)
    if config.kind is Kind.LR:
        return gen_lr(config)
    return gen_kl(config)


def make_problem(config: DataGenConfig, lambda0_scale: float, lambda2: float = 0.0):
    """Instance plus ProblemSpec with lambda0 = scale * F_y(0)."""
    from .fidelity import F_value

    A, y, x_true = generate(config)
    spec = FidelitySpec(config.kind, y, b=config.b if config.kind is Kind.KL else 0.0)
    f0 = F_value(spec, np.zeros(config.m))
    lam0 = lambda0_scale * f0
    problem = ProblemSpec(spec, A, lambda0=lam0, lambda2=lambda2)
    return problem, x_true
