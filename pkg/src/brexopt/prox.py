"""Proximal operator of the relaxed penalty, composed with projection.

The 1D prox at x reduces to an argmin over the finite candidate set
{0, x} union S_x, where S_x collects the solutions of

    u - rho psi'(u) = x - rho psi'(alpha_side)

with the side picked by the sign of x.  S_x has closed forms for power
generators with p in {4/3, 3/2, 2} (linear/quadratic/cubic equations),
for Shannon (both real Lambert branches) and for the shifted-log
generator (a quadratic).  Everything else falls back to a safeguarded
1D root scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fidelity import Constraint
from .generating import (Generator, KLGenerator, PowerGenerator,
                         RelaxationSpec, ShannonGenerator)
from .special import cubic_depressed_roots, cubic_real_roots, lambert_w

__all__ = [
    "ProxQuery", "ProxResult", "candidate_set", "prox_beta", "prox_vector",
    "make_prox", "hard_threshold", "lambert_w", "cubic_real_roots",
]

_TIE_REL = 1e-12


@dataclass(frozen=True)
class ProxQuery:
    g: Generator
    rho: float
    x: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not np.isfinite(self.x):
            raise ValueError("x must be finite")


@dataclass(frozen=True)
class ProxResult:
    u: float
    candidates: np.ndarray
    values: np.ndarray
    tie: bool


def hard_threshold(x, rho: float, lambda0: float):
    """Prox of the counting penalty: keep entries with |x| > sqrt(2 rho lambda0).

    At the tie |x| = sqrt(2 rho lambda0) both 0 and x are minimizers; the
    sparsity-biased selection returns 0.
    """
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > np.sqrt(2.0 * rho * lambda0), x, 0.0)


# ---------------------------------------------------------------------------
# candidate sets (vectorized over coordinates; parameters may be arrays)
# ---------------------------------------------------------------------------

def _sx_power(p, gamma, rho, c):
    """Solutions of u - rho*psi'(u) = c for the power family; (k, n) with NaN padding."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    gamma, c = np.broadcast_arrays(gamma, c)
    rg = rho * gamma
    n = c.size
    if p == 2.0:
        out = np.full((1, n), np.nan)
        ok = rg != 1.0
        out[0, ok] = c[ok] / (1.0 - rg[ok])
        return out
    if p == 1.5:
        # z = sqrt(u):  z^2 - 2 rg z - c = 0
        disc = rg**2 + c
        out = np.full((2, n), np.nan)
        ok = disc >= 0.0
        sq = np.sqrt(disc[ok])
        out[0, ok] = (rg[ok] + sq) ** 2
        out[1, ok] = (rg[ok] - sq) ** 2
        return out
    if p == 4.0 / 3.0:
        # z = cbrt(u):  z^3 - 3 rg z - c = 0 covers both signs of u
        roots = cubic_depressed_roots(-3.0 * rg, -c)
        return roots**3
    return None  # no closed form for this p


def _sx_shannon(gamma, rho, c):
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    gamma, c = np.broadcast_arrays(gamma, c)
    rg = rho * gamma
    n = c.size
    out = np.full((2, n), np.nan)
    # argument of W: -(1/rg) exp(-c/rg); real solutions need it >= -1/e
    expo = -c / rg
    ok = expo <= np.log(rg) - 1.0 + 1e-15
    if np.any(ok):
        arg = -np.exp(expo[ok]) / rg[ok]
        arg = np.maximum(arg, -np.exp(-1.0))
        out[0, ok] = -rg[ok] * lambert_w(0, arg)
        neg = np.zeros(n, dtype=bool)
        neg[ok] = arg < 0.0
        if np.any(neg):
            argn = -np.exp(expo[neg]) / rg[neg]
            argn = np.clip(argn, -np.exp(-1.0), -np.finfo(float).tiny)
            out[1, neg] = -rg[neg] * lambert_w(-1, argn)
    return out


def _sx_klgen(gamma, y, b, rho, c):
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    gamma, c = np.broadcast_arrays(gamma, c)
    rg = rho * gamma
    B = c + rg - b
    disc = B**2 + 4.0 * (b * (c + rg) - y * rg)
    n = c.size
    out = np.full((2, n), np.nan)
    ok = disc >= 0.0
    sq = np.sqrt(disc[ok])
    out[0, ok] = 0.5 * (B[ok] + sq)
    out[1, ok] = 0.5 * (B[ok] - sq)
    return out


def _sx_scan(g: Generator, rho: float, c: float):
    """Root scan for generators without closed-form candidates."""
    hi = max(g.alpha_plus, abs(c)) + rho * abs(g.dpsi_alpha_plus) + 1.0
    lo = 0.0 if g.constraint is Constraint.NONNEG else -hi
    if g.constraint is Constraint.NONNEG:
        lo = 1e-12 * hi
    grid = np.linspace(lo, hi, 257)
    h = grid - rho * np.asarray(g.psi_d1(grid)) - c
    roots = []
    sign = np.sign(h)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    for i in idx:
        a_, b_ = grid[i], grid[i + 1]
        fa = h[i]
        for _ in range(80):
            m = 0.5 * (a_ + b_)
            fm = m - rho * float(g.psi_d1(m)) - c
            if fa * fm <= 0:
                b_ = m
            else:
                a_, fa = m, fm
        roots.append(0.5 * (a_ + b_))
    exact = np.nonzero(h == 0.0)[0]
    roots.extend(grid[exact].tolist())
    return np.asarray(roots, dtype=float)


def candidate_set(q: ProxQuery) -> np.ndarray:
    """{0, x} union S_x, filtered to the constraint set and by the defining residual."""
    g, rho, x = q.g, q.rho, q.x
    side = g.dpsi_alpha_plus if x >= 0 else g.dpsi_alpha_minus
    c = x - rho * side
    if isinstance(g, PowerGenerator) and g.p in (2.0, 1.5, 4.0 / 3.0):
        # solve on the positive side with |x|, mirror back (beta is even)
        ca = abs(x) - rho * g.dpsi_alpha_plus
        sx = _sx_power(g.p, g.gamma, rho, ca).ravel()
        if x < 0:
            sx = -sx
    elif isinstance(g, ShannonGenerator):
        sx = _sx_shannon(g.gamma, rho, c).ravel()
    elif isinstance(g, KLGenerator):
        sx = _sx_klgen(g.gamma, g.y, g.b, rho, c).ravel()
    else:
        sx = _sx_scan(g, rho, c)
    sx = sx[np.isfinite(sx)]
    if g.constraint is Constraint.NONNEG:
        sx = sx[sx >= 0.0]
    if sx.size:
        with np.errstate(invalid="ignore"):
            resid = np.abs(sx - rho * np.asarray(g.psi_d1(sx)) - c)
        keep = np.isfinite(resid) & (resid <= 1e-8 * np.maximum(1.0, np.abs(sx)))
        sx = sx[keep]
    cands = [0.0]
    if bool(np.all(g.constraint.contains(x))):
        cands.append(x)
    return np.unique(np.concatenate([np.asarray(cands), sx]))


def _select(cands: np.ndarray, values: np.ndarray):
    """Argmin with the deterministic tie rule: 0 first, then smallest magnitude."""
    vmin = np.min(values)
    tol = _TIE_REL * (1.0 + abs(vmin))
    eligible = values <= vmin + tol
    mag = np.where(eligible, np.abs(cands), np.inf)
    i = int(np.argmin(mag))
    tie = int(np.sum(eligible)) > 1
    return cands[i], tie


def prox_beta(q: ProxQuery) -> ProxResult:
    """1D prox of rho * beta composed with projection onto the constraint set."""
    g = q.g
    cands = candidate_set(q)
    values = np.asarray(g.beta(cands)) + (cands - q.x) ** 2 / (2.0 * q.rho)
    u, tie = _select(cands, values)
    return ProxResult(float(u), cands, values, tie)


# ---------------------------------------------------------------------------
# vectorized operator over a whole relaxation family
# ---------------------------------------------------------------------------

def _beta_power_arr(p, gamma, lambda0, alpha_plus, dpsi_ap, u):
    au = np.abs(u)
    with np.errstate(invalid="ignore"):
        val = -gamma * au**p / (p * (p - 1.0)) + dpsi_ap * au
    return np.where(au <= alpha_plus, val, lambda0)


def _beta_shannon_arr(gamma, lambda0, alpha_plus, u):
    pos = u > 0.0
    safe = np.where(pos, u, 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = gamma * safe * (np.log(lambda0 / (gamma * safe)) + 1.0)
    val = np.where(pos, val, 0.0)
    return np.where(u <= alpha_plus, val, lambda0)


def _beta_klgen_arr(gamma, y, b, lambda0, alpha_plus, w, u):
    pos = u > 0.0
    safe = np.where(pos, u, 0.0)
    val = gamma * y * (np.log((safe + b) / b) + w * safe / b)
    val = np.where(pos, val, 0.0)
    return np.where(u <= alpha_plus, val, lambda0)


def _select_arr(x, rho, cands, betas):
    """Row-wise argmin of beta + (u-x)^2/(2 rho) with the tie rule; NaN candidates ignored."""
    phi = betas + (cands - x[None, :]) ** 2 / (2.0 * rho)
    phi = np.where(np.isnan(cands), np.inf, phi)
    vmin = np.min(phi, axis=0)
    eligible = phi <= vmin[None, :] + _TIE_REL * (1.0 + np.abs(vmin))[None, :]
    mag = np.where(eligible, np.abs(cands), np.inf)
    pick = np.argmin(mag, axis=0)
    return np.take_along_axis(cands, pick[None, :], axis=0)[0]


class ProxOperator:
    """Coordinate-wise prox of a relaxation family, with per-kind vector paths."""

    def __init__(self, relaxation: RelaxationSpec):
        self.relaxation = relaxation
        self.lambda0 = relaxation.lambda0
        self.constraint = relaxation.constraint
        self._groups = []
        scalar_idx = []
        bykey: dict = {}
        for i, g in enumerate(relaxation.generators):
            if g is None:
                bykey.setdefault(("l0",), []).append(i)
            elif isinstance(g, PowerGenerator) and g.p in (2.0, 1.5, 4.0 / 3.0):
                bykey.setdefault(("power", g.p), []).append(i)
            elif isinstance(g, ShannonGenerator):
                bykey.setdefault(("shannon",), []).append(i)
            elif isinstance(g, KLGenerator):
                bykey.setdefault(("klgen",), []).append(i)
            else:
                scalar_idx.append(i)
        for key, idx in bykey.items():
            idx = np.asarray(idx, dtype=int)
            gens = [relaxation.generators[i] for i in idx]
            if key[0] == "l0":
                self._groups.append(("l0", idx, None))
            elif key[0] == "power":
                params = dict(
                    p=key[1],
                    gamma=np.array([g.gamma for g in gens]),
                    alpha_plus=np.array([g.alpha_plus for g in gens]),
                    dpsi_ap=np.array([g.dpsi_alpha_plus for g in gens]),
                )
                self._groups.append(("power", idx, params))
            elif key[0] == "shannon":
                params = dict(
                    gamma=np.array([g.gamma for g in gens]),
                    alpha_plus=np.array([g.alpha_plus for g in gens]),
                    dpsi_ap=np.array([g.dpsi_alpha_plus for g in gens]),
                )
                self._groups.append(("shannon", idx, params))
            else:
                params = dict(
                    gamma=np.array([g.gamma for g in gens]),
                    y=np.array([g.y for g in gens]),
                    b=np.array([g.b for g in gens]),
                    alpha_plus=np.array([g.alpha_plus for g in gens]),
                    dpsi_ap=np.array([g.dpsi_alpha_plus for g in gens]),
                    w=np.array([g._w_branch for g in gens]),
                )
                self._groups.append(("klgen", idx, params))
        self._scalar_idx = scalar_idx

    def __call__(self, rho: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        lam = self.lambda0
        for kind, idx, prm in self._groups:
            xi = x[idx]
            if kind == "l0":
                out[idx] = hard_threshold(xi, rho, lam)
            elif kind == "power":
                out[idx] = self._power(rho, xi, prm)
            elif kind == "shannon":
                out[idx] = self._nonneg(rho, xi, prm, "shannon")
            else:
                out[idx] = self._nonneg(rho, xi, prm, "klgen")
        for i in self._scalar_idx:
            out[i] = prox_beta(ProxQuery(self.relaxation.generators[i], rho, float(x[i]))).u
        if self.constraint is Constraint.NONNEG:
            np.maximum(out, 0.0, out=out)
        return out

    def penalty_value(self, x: np.ndarray) -> float:
        """Sum of the per-coordinate penalties, using the grouped vector paths."""
        x = np.asarray(x, dtype=float)
        total = 0.0
        lam = self.lambda0
        for kind, idx, prm in self._groups:
            xi = x[idx]
            if kind == "l0":
                total += lam * float(np.count_nonzero(xi))
            elif kind == "power":
                total += float(np.sum(_beta_power_arr(prm["p"], prm["gamma"], lam,
                                                      prm["alpha_plus"], prm["dpsi_ap"], xi)))
            elif kind == "shannon":
                total += float(np.sum(_beta_shannon_arr(prm["gamma"], lam,
                                                        prm["alpha_plus"], xi)))
            else:
                total += float(np.sum(_beta_klgen_arr(prm["gamma"], prm["y"], prm["b"], lam,
                                                      prm["alpha_plus"], prm["w"], xi)))
        for i in self._scalar_idx:
            total += float(self.relaxation.generators[i].beta(float(x[i])))
        return total

    def _power(self, rho, x, prm):
        s = np.sign(x)
        xa = np.abs(x)
        c = xa - rho * prm["dpsi_ap"]
        sx = _sx_power(prm["p"], prm["gamma"], rho, c)
        cands = np.vstack([np.zeros_like(xa), xa, sx])
        betas = _beta_power_arr(prm["p"], prm["gamma"], self.lambda0,
                                prm["alpha_plus"], prm["dpsi_ap"], cands)
        return s * _select_arr(xa, rho, cands, betas)

    def _nonneg(self, rho, x, prm, kind):
        c = x - rho * prm["dpsi_ap"]
        if kind == "shannon":
            sx = _sx_shannon(prm["gamma"], rho, c)
        else:
            sx = _sx_klgen(prm["gamma"], prm["y"], prm["b"], rho, c)
        sx = np.where(sx >= 0.0, sx, np.nan)
        xc = np.where(x >= 0.0, x, np.nan)
        cands = np.vstack([np.zeros_like(x), xc, sx])
        if kind == "shannon":
            betas = _beta_shannon_arr(prm["gamma"], self.lambda0, prm["alpha_plus"], cands)
        else:
            betas = _beta_klgen_arr(prm["gamma"], prm["y"], prm["b"], self.lambda0,
                                    prm["alpha_plus"], prm["w"], cands)
        return _select_arr(x, rho, cands, betas)


def make_prox(relaxation: RelaxationSpec) -> ProxOperator:
    return ProxOperator(relaxation)


def prox_vector(relaxation: RelaxationSpec, rho: float, x: np.ndarray) -> np.ndarray:
    """Coordinate-wise prox then projection onto the constraint set."""
    return make_prox(relaxation)(rho, np.asarray(x, dtype=float))
