"""Brute-force oracles used by the property suite (and `--self-check`).

These deliberately avoid the closed-form penalty/prox code paths: the
penalty is evaluated from its raw sup definition through the Bregman
distance, the prox from a dense grid argmin.  Agreement between the two
routes is what the test suite certifies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fidelity import Constraint
from .generating import Generator, RelaxationSpec, bregman_d


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    points: int = 4097

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if self.points < 3:
            raise ValueError("need at least 3 points")

    def array(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


def default_grid(g: Generator, x: float = 0.0, points: int = 4097) -> GridSpec:
    lo = min(g.alpha_minus, x) - 1.0
    hi = max(g.alpha_plus, x) + 1.0
    if g.constraint is Constraint.NONNEG:
        lo = 0.0
    return GridSpec(lo, hi, points)


def _golden(fun, a: float, b: float, iters: int = 80):
    """Golden-section minimization of fun on [a, b]."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def oracle_prox(g: Generator, rho: float, x: float, grid: GridSpec | None = None) -> float:
    """Grid argmin of beta(u) + (u-x)^2/(2 rho), refined by golden section."""
    grid = default_grid(g, x) if grid is None else grid
    u = grid.array()

    def phi_arr(z):
        return np.asarray(g.beta(z)) + (np.asarray(z) - x) ** 2 / (2.0 * rho)

    vals = phi_arr(u)
    i = int(np.argmin(vals))
    a = u[max(i - 1, 0)]
    b = u[min(i + 1, u.size - 1)]
    u_star = _golden(lambda z: float(phi_arr(np.asarray([z]))[0]), a, b)
    # the grid winner may sit at a kink the refinement walked away from
    cand = [u[i], u_star, 0.0]
    if bool(np.all(g.constraint.contains(x))):
        cand.append(x)
    cand = np.asarray(cand)
    vals = phi_arr(cand)
    return float(cand[int(np.argmin(vals))])


def _min_d0_capped(g: Generator, z, lam0: float):
    """min(lambda0, d(0, z)) evaluated from the raw Bregman distance."""
    return np.minimum(lam0, np.asarray(bregman_d(g, 0.0, z)))


def oracle_beta(g: Generator, x: float, grid: GridSpec | None = None) -> float:
    """sup_z of min(lambda0, d(0,z)) - d(x,z): the raw definition of the penalty."""
    grid = default_grid(g, x) if grid is None else grid
    z = np.unique(np.append(grid.array(), x))
    z = z[np.asarray(g.constraint.contains(z))]
    if g.dpsi0 == -float("inf"):
        z = z[z != 0.0]  # psi' has a vertical tangent at 0
    vals = _min_d0_capped(g, z, g.lambda0) - np.asarray(bregman_d(g, x, z))
    i = int(np.argmax(vals))
    a = z[max(i - 1, 0)]
    b = z[min(i + 1, z.size - 1)]
    if a < b:
        def neg(t):
            return -(float(_min_d0_capped(g, np.asarray([t]), g.lambda0)[0])
                     - float(bregman_d(g, x, t)))
        t_star = _golden(neg, a, b)
        return max(float(vals[i]), -neg(t_star))
    return float(vals[i])


def oracle_s_transform(g: Generator, x: float, grid: GridSpec | None = None) -> float:
    """Double generalized conjugation computed numerically on 1D grids.

    First pass: s(u) = sup_v -lambda0 |v|_0 - d(v, u) over the grid union {0, u}.
    Second pass: sup_u -s(u) - d(x, u).
    """
    grid = default_grid(g, x) if grid is None else grid
    u = grid.array()
    if float(g.dpsi0) == -float("inf"):
        u = u[u > 0]
    else:
        u = u[np.asarray(g.constraint.contains(u))]
    # v-grid = u-grid plus {0}: v = u contributes -lambda0, v = 0 contributes -d(0, u)
    d0 = np.asarray(bregman_d(g, 0.0, u))
    s = np.maximum(-g.lambda0, -d0)
    vals = -s - np.asarray(bregman_d(g, x, u))
    i = int(np.argmax(vals))
    a = u[max(i - 1, 0)]
    b = u[min(i + 1, u.size - 1)]
    if a < b:
        def neg(t):
            st = max(-g.lambda0, -float(bregman_d(g, 0.0, t)))
            return -(-st - float(bregman_d(g, x, t)))
        t_star = _golden(neg, a, b)
        return max(float(vals[i]), -neg(t_star))
    return float(vals[i])


def oracle_s_value(g: Generator, u: float) -> float:
    """S at a single point: sup_v -lambda0 |v|_0 - d(v, u) = max(-lambda0, -d(0, u))."""
    if u == 0.0:
        return 0.0  # v = 0 attains the sup; d(0, 0) = 0 regardless of psi'(0)
    return max(-g.lambda0, -float(bregman_d(g, 0.0, u)))


def oracle_convexity(values: np.ndarray, tol: float = 1e-9) -> bool:
    """Second differences of uniformly gridded values are >= -tol."""
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        return True
    d2 = values[2:] - 2.0 * values[1:-1] + values[:-2]
    return bool(np.min(d2) >= -tol)


def oracle_brex(relaxation: RelaxationSpec, x, points: int = 4097) -> float:
    """Separable sum of oracle_beta over coordinates (None coordinates count zeros)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0.0
    for g, xn in zip(relaxation.generators, x):
        if g is None:
            total += relaxation.lambda0 * (xn != 0.0)
        else:
            total += oracle_beta(g, float(xn), default_grid(g, float(xn), points))
    return total
