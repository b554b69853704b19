"""Numeric primitives: Lambert W (both real branches) and real cubic roots.

Self-contained on purpose: the proximal formulas depend on these, and the
test suite checks them against independent oracles (w e^w round-trips and
companion-matrix eigenvalues).
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

_BRANCH_POINT = -np.exp(-1.0)


def _halley(w, z, max_iter: int = 50):
    """Polish w e^w = z in place; cubic convergence from any seed in the basin."""
    w = np.asarray(w, dtype=float).copy()
    z = np.asarray(z, dtype=float)
    for _ in range(max_iter):
        ew = np.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            dw = f / denom
        dw = np.where(np.isfinite(dw), dw, 0.0)
        w = w - dw
        if np.all(np.abs(dw) <= 1e-16 * (2.0 + np.abs(w))):
            break
    return w


def lambert_w(branch: int, z):
    """Real Lambert W: solve w e^w = z on branch 0 (z >= -1/e) or -1 (-1/e <= z < 0)."""
    scalar = np.isscalar(z)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if branch not in (0, -1):
        raise ValueError("branch must be 0 or -1")
    if np.any(z < _BRANCH_POINT - 1e-14):
        raise DomainError("argument below the branch point -1/e")
    if branch == -1 and np.any(z >= 0.0):
        raise DomainError("branch -1 is defined on -1/e <= z < 0")
    z = np.maximum(z, _BRANCH_POINT)

    # series around the branch point, Corless et al. style
    p = np.sqrt(np.maximum(2.0 * (np.e * z + 1.0), 0.0))
    if branch == 0:
        w = np.log1p(z)  # safe: 1 + z >= 1 - 1/e
        big = z > 1.5
        if np.any(big):
            l1 = np.log(z[big])
            l2 = np.log(l1)
            w[big] = l1 - l2 + l2 / l1
        near = z < _BRANCH_POINT + 0.05
        w[near] = -1.0 + p[near] - p[near] ** 2 / 3.0 + 11.0 * p[near] ** 3 / 72.0
    else:
        with np.errstate(divide="ignore"):
            ln = np.log(-z)
            w = ln - np.log(-ln)
        near = z < _BRANCH_POINT + 0.05
        w[near] = -1.0 - p[near] - p[near] ** 2 / 3.0 - 11.0 * p[near] ** 3 / 72.0

    w = _halley(w, z)
    w[z == _BRANCH_POINT] = -1.0
    if branch == 0:
        w[z == 0.0] = 0.0
    return float(w[0]) if scalar else w


def lambert_w0(z):
    return lambert_w(0, z)


def lambert_wm1(z):
    return lambert_w(-1, z)


def _cbrt(x):
    return np.sign(x) * np.abs(x) ** (1.0 / 3.0)


def cubic_depressed_roots(p, q):
    """Real roots of z^3 + p z + q = 0, vectorized; returns (3, n) with NaN padding."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p, q = np.broadcast_arrays(p, q)
    n = p.size
    roots = np.full((3, n), np.nan)

    disc = (0.5 * q) ** 2 + (p / 3.0) ** 3
    one = disc > 0.0
    if np.any(one):
        sq = np.sqrt(disc[one])
        a = _cbrt(-0.5 * q[one] + sq)
        b = _cbrt(-0.5 * q[one] - sq)
        roots[0, one] = a + b
    three = ~one
    if np.any(three):
        pm = np.minimum(p[three], 0.0)
        r = np.sqrt(np.maximum(-pm / 3.0, 0.0))
        safe_r3 = np.where(r > 0, r**3, 1.0)
        cosarg = np.clip(np.where(r > 0, -0.5 * q[three] / safe_r3, 1.0), -1.0, 1.0)
        theta = np.arccos(cosarg)
        for k in range(3):
            roots[k, three] = 2.0 * r * np.cos((theta - 2.0 * np.pi * k) / 3.0)

    # two Newton polish sweeps; skip near-critical points where f' ~ 0
    for _ in range(2):
        f = roots**3 + p * roots + q
        fp = 3.0 * roots**2 + p
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.abs(fp) > 1e-12, f / fp, 0.0)
        roots = roots - np.where(np.isfinite(step), step, 0.0)
    return roots


def cubic_real_roots(a3: float, a2: float, a1: float, a0: float) -> np.ndarray:
    """All real roots of a3 z^3 + a2 z^2 + a1 z + a0 = 0 (a3 != 0), Cardano + polish."""
    if a3 == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    b, c, d = a2 / a3, a1 / a3, a0 / a3
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    z = cubic_depressed_roots(p, q)[:, 0] - shift
    z = z[np.isfinite(z)]
    # final polish on the undepressed polynomial
    for _ in range(2):
        f = ((z + b) * z + c) * z + d
        fp = (3.0 * z + 2.0 * b) * z + c
        safe = np.abs(fp) > 1e-12 * np.maximum(1.0, np.abs(z))
        with np.errstate(invalid="ignore", divide="ignore"):
            step = np.where(safe, f / np.where(safe, fp, 1.0), 0.0)
        z = z - step
    return np.sort(z)
