"""Generating functions and the induced 1D relaxed penalties.

A generator is a strictly convex psi on the constraint set, scaled by a
curvature gamma.  From it we derive:

* the Bregman distance d(x, z) = psi(x) - psi(z) - psi'(z)(x - z),
* the endpoints alpha- <= 0 <= alpha+ of the lambda0-sublevel set of d(0, .),
* the 1D penalty beta(x): psi(0) - psi(x) + psi'(alpha+-) x between the
  endpoints, constant lambda0 outside,
* the subdifferential interval [ell-, ell+] of beta at 0.

Four families are provided: power |x|^p/(p(p-1)) with p in (1, 2], Shannon
entropy, a shifted-log (KL-type) generator, and a generator matched to a 1D
fidelity row (the convex-envelope construction for diagonal operators).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import fidelity
from .errors import ConvergenceError, DomainError
from .fidelity import Constraint, Kind
from .special import lambert_w0

_INF = float("inf")


class Generator:
    """Shared derived quantities; concrete families implement psi and its derivatives."""

    gamma: float
    lambda0: float
    constraint: Constraint

    # -- primitive surface (vectorized over x) --------------------------------

    def psi(self, x):
        raise NotImplementedError

    def psi_d1(self, x):
        raise NotImplementedError

    def psi_d2(self, x):
        raise NotImplementedError

    def _check_domain(self, x):
        if self.constraint is Constraint.NONNEG and np.any(np.asarray(x) < 0):
            raise DomainError(f"{type(self).__name__} is only defined on x >= 0")

    # -- derived quantities ----------------------------------------------------

    @cached_property
    def psi0(self) -> float:
        return float(self.psi(0.0))

    @cached_property
    def dpsi0(self) -> float:
        """psi'(0); -inf for generators with a vertical tangent at the origin."""
        return float(self.psi_d1(0.0))

    def bregman_from_zero(self, z):
        """d(0, z) = psi(0) - psi(z) + z psi'(z), vectorized."""
        z = np.asarray(z, dtype=float)
        return self.psi0 - self.psi(z) + z * self.psi_d1(z)

    def _alpha_bounds(self) -> tuple[float, float]:
        raise NotImplementedError

    @cached_property
    def alpha_minus(self) -> float:
        return self._alpha_bounds()[0]

    @cached_property
    def alpha_plus(self) -> float:
        return self._alpha_bounds()[1]

    @cached_property
    def dpsi_alpha_minus(self) -> float:
        return float(self.psi_d1(self.alpha_minus)) if self.alpha_minus < 0 else self.dpsi0

    @cached_property
    def dpsi_alpha_plus(self) -> float:
        return float(self.psi_d1(self.alpha_plus))

    @cached_property
    def ell_minus(self) -> float:
        if self.constraint is Constraint.NONNEG:
            return -_INF
        return self.dpsi_alpha_minus - self.dpsi0

    @cached_property
    def ell_plus(self) -> float:
        if self.dpsi0 == -_INF:
            return _INF
        return self.dpsi_alpha_plus - self.dpsi0

    def beta(self, x):
        """1D relaxed penalty, vectorized; equals lambda0 outside [alpha-, alpha+]."""
        scalar = np.isscalar(x) or np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, self.lambda0)
        lo = (x >= self.alpha_minus) & (x < 0.0)
        hi = (x >= 0.0) & (x <= self.alpha_plus)
        if np.any(lo):
            xl = x[lo]
            out[lo] = self.psi0 - self.psi(xl) + self.dpsi_alpha_minus * xl
        if np.any(hi):
            xh = x[hi]
            out[hi] = self.psi0 - self.psi(xh) + self.dpsi_alpha_plus * xh
        return float(out[0]) if scalar else out

    def inf_curvature(self) -> float:
        """inf of psi'' over (alpha-, alpha+) \\ {0}."""
        raise NotImplementedError

    def sup_curvature(self) -> float:
        """sup of psi'' over the constraint set; +inf if unbounded."""
        raise NotImplementedError


def _bisect_d0(gen: Generator, target: float, side: int, tol: float = 1e-12,
               max_doublings: int = 200) -> float:
    """Solve d(0, z) = target on the side sign(z) = side by bracket doubling + bisection."""
    z = side * min(1.0, target / max(gen.gamma, 1e-300))
    if z == 0.0:
        z = side * 1e-12
    for _ in range(max_doublings):
        if gen.bregman_from_zero(z) > target:
            break
        z *= 2.0
    else:
        raise ConvergenceError("no bracket for the sublevel endpoint after 200 doublings")
    lo, hi = 0.0, z
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gen.bregman_from_zero(mid) - target > 0.0:
            hi = mid
        else:
            lo = mid
        if abs(hi - lo) <= tol * max(1.0, abs(hi)):
            break
    # polish by secant on d(0, z) - target
    z = 0.5 * (lo + hi)
    for _ in range(8):
        d = gen.bregman_from_zero(z) - target
        slope = z * float(gen.psi_d2(z))
        if slope == 0.0:
            break
        step = d / slope
        z_new = z - step
        if side * z_new <= 0.0:
            break
        z = z_new
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    return z


@dataclass(frozen=True)
class PowerGenerator(Generator):
    """psi(x) = gamma |x|^p / (p (p-1)), p in (1, 2], on the whole line."""

    p: float
    gamma: float
    lambda0: float
    constraint: Constraint = Constraint.REALS

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ValueError("power generator needs p in (1, 2]")
        if self.gamma <= 0 or self.lambda0 <= 0:
            raise ValueError("gamma and lambda0 must be positive")

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return self.gamma * np.abs(x) ** self.p / (self.p * (self.p - 1.0))

    def psi_d1(self, x):
        x = np.asarray(x, dtype=float)
        return self.gamma * np.sign(x) * np.abs(x) ** (self.p - 1.0) / (self.p - 1.0)

    def psi_d2(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.gamma * np.abs(x) ** (self.p - 2.0)

    def _alpha_bounds(self):
        a = (self.p * self.lambda0 / self.gamma) ** (1.0 / self.p)
        lo = 0.0 if self.constraint is Constraint.NONNEG else -a
        return lo, a

    def inf_curvature(self):
        # |x|^(p-2) decreases with |x| for p <= 2, so the inf sits at the endpoints
        return self.gamma ** (2.0 / self.p) * (self.p * self.lambda0) ** ((self.p - 2.0) / self.p)

    def sup_curvature(self):
        return self.gamma if self.p == 2.0 else _INF


@dataclass(frozen=True)
class ShannonGenerator(Generator):
    """psi(x) = gamma (x log x - x + 1) on x >= 0; psi(0) = gamma, psi'(0+) = -inf."""

    gamma: float
    lambda0: float
    constraint: Constraint = field(default=Constraint.NONNEG, init=False)

    def __post_init__(self):
        if self.gamma <= 0 or self.lambda0 <= 0:
            raise ValueError("gamma and lambda0 must be positive")

    def psi(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        xlogx = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        return self.gamma * (xlogx - x + 1.0)

    def psi_d1(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.gamma * np.log(x)

    def psi_d2(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.gamma / x

    def bregman_from_zero(self, z):
        return self.gamma * np.asarray(z, dtype=float)

    def _alpha_bounds(self):
        return 0.0, self.lambda0 / self.gamma

    def inf_curvature(self):
        return self.gamma**2 / self.lambda0

    def sup_curvature(self):
        return _INF


@dataclass(frozen=True)
class KLGenerator(Generator):
    """psi(x) = gamma (x + b - y log(x + b)) on x >= 0 with y, b > 0."""

    y: float
    b: float
    gamma: float
    lambda0: float
    constraint: Constraint = field(default=Constraint.NONNEG, init=False)

    def __post_init__(self):
        if self.y <= 0 or self.b <= 0:
            raise ValueError("KL generator needs y > 0 and b > 0")
        if self.gamma <= 0 or self.lambda0 <= 0:
            raise ValueError("gamma and lambda0 must be positive")

    @property
    def kappa(self) -> float:
        return self.lambda0 / (self.y * self.gamma) + math.log(self.b) + 1.0

    def psi(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        return self.gamma * (x + self.b - self.y * np.log(x + self.b))

    def psi_d1(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        return self.gamma * (1.0 - self.y / (x + self.b))

    def psi_d2(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        return self.gamma * self.y / (x + self.b) ** 2

    def bregman_from_zero(self, z):
        z = np.asarray(z, dtype=float)
        return self.gamma * self.y * (np.log((z + self.b) / self.b) - z / (z + self.b))

    @cached_property
    def _w_branch(self) -> float:
        return lambert_w0(-self.b * math.exp(-self.kappa))

    def _alpha_bounds(self):
        return 0.0, -self.b / self._w_branch - self.b

    def inf_curvature(self):
        return self.gamma * self.y * self._w_branch**2 / self.b**2

    def sup_curvature(self):
        return self.gamma * self.y / self.b**2


@dataclass(frozen=True)
class MatchedGenerator(Generator):
    """psi(x) = gamma (f(a x; y) + lambda2 x^2 / 2), matched to one fidelity row.

    For a diagonal operator and gamma = 1 the induced relaxed objective is the
    convex envelope of the l0-penalized 1D objective.
    """

    kind: Kind
    y: float
    a: float
    gamma: float
    lambda0: float
    b: float = 0.0
    lambda2: float = 0.0
    constraint: Constraint = Constraint.REALS

    def __post_init__(self):
        if self.gamma <= 0 or self.lambda0 <= 0:
            raise ValueError("gamma and lambda0 must be positive")
        if self.kind is Kind.KL and self.constraint is not Constraint.NONNEG:
            object.__setattr__(self, "constraint", Constraint.NONNEG)

    def psi(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        fv = fidelity.f_value(self.kind, self.a * x, self.y, self.b)
        return self.gamma * (fv + 0.5 * self.lambda2 * x**2)

    def psi_d1(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        fd = fidelity.f_d1(self.kind, self.a * x, self.y, self.b)
        return self.gamma * (self.a * fd + self.lambda2 * x)

    def psi_d2(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        fdd = fidelity.f_d2(self.kind, self.a * x, self.y, self.b)
        return self.gamma * (self.a**2 * fdd + self.lambda2)

    def _alpha_bounds(self):
        hi = _bisect_d0(self, self.lambda0, +1)
        if self.constraint is Constraint.NONNEG:
            return 0.0, hi
        return _bisect_d0(self, self.lambda0, -1), hi

    def inf_curvature(self):
        parts = [np.linspace(self.alpha_plus * 1e-9, self.alpha_plus, 512)]
        if self.alpha_minus < 0.0:
            parts.append(np.linspace(self.alpha_minus, self.alpha_minus * 1e-9, 512))
        ts = np.concatenate(parts)
        ts = ts[ts != 0.0]
        return float(np.min(self.psi_d2(ts)))

    def sup_curvature(self):
        # all supported fidelities have f'' maximal at z = 0
        return float(self.psi_d2(0.0))


# ---------------------------------------------------------------------------
# Spec-surface functions (thin wrappers over the generator methods)
# ---------------------------------------------------------------------------

def psi_value(g: Generator, x):
    return g.psi(x)


def psi_d1(g: Generator, x):
    return g.psi_d1(x)


def psi_d2(g: Generator, x):
    return g.psi_d2(x)


def bregman_d(g: Generator, x, z):
    """d(x, z) = psi(x) - psi(z) - psi'(z) (x - z); nonnegative, 0 iff x == z."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return g.psi(x) - g.psi(z) - g.psi_d1(z) * (x - z)


def alpha_bounds(g: Generator) -> tuple[float, float]:
    return g.alpha_minus, g.alpha_plus


def beta_value(g: Generator, x):
    return g.beta(x)


def ell_bounds(g: Generator) -> tuple[float, float]:
    return g.ell_minus, g.ell_plus


@dataclass(frozen=True)
class RelaxationSpec:
    """A family of per-coordinate generators; None marks a coordinate kept as pure l0."""

    generators: tuple
    lambda0: float
    constraint: Constraint

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))

    @property
    def n(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)


def brex_value(relaxation: RelaxationSpec, x) -> float:
    """Sum of the per-coordinate penalties at x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0.0
    for g, xn in zip(relaxation.generators, x):
        if g is None:
            total += relaxation.lambda0 * (xn != 0.0)
        else:
            total += float(g.beta(xn))
    return total
