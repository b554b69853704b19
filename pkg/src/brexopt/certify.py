"""Optimality certification against both the relaxed and the raw objective.

The tests implement the stationarity system of the relaxed objective (an
interval condition at zero coordinates, a shifted-gradient equation inside
the sublevel intervals, plain stationarity outside), the restricted-problem
characterization of local minimizers of the counting objective, and the
preservation conditions that decide which of those survive the relaxation.
`enumerate_minimizers` is the exhaustive small-instance oracle: one convex
solve per candidate support.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import fidelity as fid
from .errors import EnumerationLimitError
from .fidelity import Constraint, Kind
from .generating import RelaxationSpec
from .problem import ProblemSpec

INTERVAL_SLACK = 1e-8


@dataclass(frozen=True)
class CertRecord:
    support: tuple
    is_critical_JPsi: bool | None
    is_localmin_JPsi: bool | None
    is_localmin_J0: bool
    is_strict: bool
    max_residual: float
    interval_violations: tuple
    boundary_hits: tuple

    def to_json(self) -> str:
        return json.dumps({
            "schema": 1,
            "support": list(self.support),
            "is_critical_JPsi": self.is_critical_JPsi,
            "is_localmin_JPsi": self.is_localmin_JPsi,
            "is_localmin_J0": self.is_localmin_J0,
            "is_strict": self.is_strict,
            "max_residual": self.max_residual,
            "interval_violations": list(self.interval_violations),
            "boundary_hits": list(self.boundary_hits),
        })


def support(x, tol: float = 0.0) -> tuple:
    x = np.asarray(x, dtype=float)
    return tuple(int(i) for i in np.nonzero(np.abs(x) > tol)[0])


def _rank_full(A_sigma: np.ndarray) -> bool:
    if A_sigma.shape[1] == 0:
        return True
    s = np.linalg.svd(A_sigma, compute_uv=False)
    return bool(np.sum(s > 1e-10 * s[0]) == A_sigma.shape[1])


def is_strict_minimizer(problem: ProblemSpec, x) -> bool:
    """lambda2 > 0 or full column rank of A restricted to the support."""
    if problem.lambda2 > 0:
        return True
    sig = support(x)
    return _rank_full(problem.A[:, list(sig)])


def check_critical_JPsi(problem: ProblemSpec, relaxation: RelaxationSpec, x,
                        tol: float = 1e-6):
    """Stationarity of the relaxed objective; returns (ok, max_residual, boundary_hits)."""
    x = np.asarray(x, dtype=float)
    grad_corr, _ = fid.grad_F(problem.fidelity, problem.A, x)
    eq_res = 0.0       # stationarity-equation residuals, judged against tol
    int_res = 0.0      # interval-membership violations, judged against the slack
    boundary = []
    for n2 in range(problem.n):
        g = relaxation.generators[n2]
        xn = float(x[n2])
        gn = float(grad_corr[n2])
        if g is None:
            if xn != 0.0:
                eq_res = max(eq_res, abs(gn + problem.lambda2 * xn))
            continue
        am, ap = g.alpha_minus, g.alpha_plus
        if abs(xn - ap) <= INTERVAL_SLACK or (am < 0 and abs(xn - am) <= INTERVAL_SLACK):
            boundary.append(n2)
        if xn == 0.0:
            lo, hi = g.ell_minus, g.ell_plus
            viol = 0.0
            if math.isfinite(lo):
                viol = max(viol, lo - (-gn))
            if math.isfinite(hi):
                viol = max(viol, (-gn) - hi)
            int_res = max(int_res, viol)
        elif am <= xn < 0.0:
            eq_res = max(eq_res, abs(gn + problem.lambda2 * xn - float(g.psi_d1(xn)) + g.dpsi_alpha_minus))
        elif 0.0 < xn <= ap:
            eq_res = max(eq_res, abs(gn + problem.lambda2 * xn - float(g.psi_d1(xn)) + g.dpsi_alpha_plus))
        else:
            eq_res = max(eq_res, abs(gn + problem.lambda2 * xn))
    ok = eq_res <= tol and int_res <= INTERVAL_SLACK
    return ok, max(eq_res, int_res), tuple(boundary)


def check_localmin_J0(problem: ProblemSpec, x, tol: float = 1e-6) -> bool:
    """Restricted stationarity on the support (empty support is always a local min)."""
    x = np.asarray(x, dtype=float)
    sig = list(support(x))
    if not sig:
        return True
    if problem.constraint is Constraint.NONNEG and np.any(x[sig] <= 0.0):
        return False
    grad_corr, _ = fid.grad_F(problem.fidelity, problem.A, x)
    res = np.abs(grad_corr[sig] + problem.lambda2 * x[sig])
    return bool(np.max(res) <= tol)


def check_localmin_JPsi(problem: ProblemSpec, relaxation: RelaxationSpec, x,
                        tol: float = 1e-6) -> CertRecord:
    """Critical point whose nonzero coordinates clear the sublevel intervals."""
    x = np.asarray(x, dtype=float)
    crit, max_res, boundary = check_critical_JPsi(problem, relaxation, x, tol)
    violations = []
    for n2 in support(x):
        g = relaxation.generators[n2]
        if g is None:
            continue
        xn = float(x[n2])
        if g.alpha_minus - INTERVAL_SLACK <= xn <= g.alpha_plus + INTERVAL_SLACK:
            violations.append(n2)
    is_min = bool(crit and not violations)
    return CertRecord(
        support=support(x),
        is_critical_JPsi=bool(crit),
        is_localmin_JPsi=is_min,
        is_localmin_J0=check_localmin_J0(problem, x, tol),
        is_strict=is_min and is_strict_minimizer(problem, x),
        max_residual=max_res,
        interval_violations=tuple(violations),
        boundary_hits=boundary,
    )


def check_preserved(problem: ProblemSpec, relaxation: RelaxationSpec, x) -> bool:
    """Does a local minimizer of the counting objective survive the relaxation?

    Support entries must clear their sublevel interval; off-support gradient
    entries must fall inside the subdifferential interval at zero.
    """
    x = np.asarray(x, dtype=float)
    grad_corr, _ = fid.grad_F(problem.fidelity, problem.A, x)
    sig = set(support(x))
    for n2 in range(problem.n):
        g = relaxation.generators[n2]
        if g is None:
            continue
        xn = float(x[n2])
        if n2 in sig:
            if g.alpha_minus - INTERVAL_SLACK <= xn <= g.alpha_plus + INTERVAL_SLACK:
                return False
        else:
            v = -float(grad_corr[n2])
            if math.isfinite(g.ell_minus) and v < g.ell_minus - INTERVAL_SLACK:
                return False
            if math.isfinite(g.ell_plus) and v > g.ell_plus + INTERVAL_SLACK:
                return False
    return True


def threshold_to_J0(relaxation: RelaxationSpec, x) -> np.ndarray:
    """Zero every coordinate strictly inside its open sublevel interval."""
    x = np.asarray(x, dtype=float).copy()
    for n2, g in enumerate(relaxation.generators):
        if g is None:
            continue
        if x[n2] != 0.0 and g.alpha_minus < x[n2] < g.alpha_plus:
            x[n2] = 0.0
    return x


# ---------------------------------------------------------------------------
# exhaustive enumeration for small instances
# ---------------------------------------------------------------------------

def _restricted_solve(problem: ProblemSpec, sig: tuple):
    """Minimize F_y(A_sigma z) + (lambda2/2)||z||^2 over the open domain; None on failure."""
    A = problem.A[:, list(sig)]
    k = len(sig)
    spec = problem.fidelity
    if spec.kind is Kind.LS:
        H = A.T @ A + problem.lambda2 * np.eye(k)
        try:
            z = np.linalg.solve(H, A.T @ spec.y)
        except np.linalg.LinAlgError:
            z, *_ = np.linalg.lstsq(A, spec.y, rcond=None)
        return z

    def value(z):
        return fid.F_value(spec, A @ z) + 0.5 * problem.lambda2 * float(z @ z)

    def feasible(z):
        return spec.kind is not Kind.KL or np.all(A @ z + spec.b > 0.0)

    z = np.zeros(k)
    val = value(z)
    for _ in range(100):
        w = A @ z
        g1 = A.T @ fid.f_d1(spec.kind, w, spec.y, spec.b) + problem.lambda2 * z
        if np.max(np.abs(g1)) <= 1e-12:
            return z
        d2 = fid.f_d2(spec.kind, w, spec.y, spec.b)
        H = A.T @ (d2[:, None] * A) + problem.lambda2 * np.eye(k)
        try:
            step = np.linalg.solve(H, -g1)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        for _ in range(60):
            z_new = z + t * step
            if feasible(z_new) and value(z_new) <= val + 1e-15 * max(1.0, abs(val)):
                break
            t *= 0.5
        else:
            return None
        z, val = z_new, value(z_new)
    w = A @ z
    g1 = A.T @ fid.f_d1(spec.kind, w, spec.y, spec.b) + problem.lambda2 * z
    if np.max(np.abs(g1)) > 1e-9:
        return None
    return z


def enumerate_minimizers(problem: ProblemSpec, max_support: int,
                         relaxation: RelaxationSpec | None = None, tol: float = 1e-6):
    """All local minimizers with support size <= max_support, sorted by objective.

    Returns a list of (x, CertRecord, J0 value).  Guarded: at most 20
    variables and 1e6 candidate supports.
    """
    n = problem.n
    if n > 20:
        raise EnumerationLimitError("enumeration is limited to 20 variables")
    max_support = min(max_support, n)
    total = sum(math.comb(n, k) for k in range(max_support + 1))
    if total > 10**6:
        raise EnumerationLimitError(f"{total} supports exceed the enumeration guard")

    found = []
    for k in range(max_support + 1):
        for sig in itertools.combinations(range(n), k):
            if k == 0:
                z = np.zeros(0)
            else:
                z = _restricted_solve(problem, sig)
                if z is None:
                    warnings.warn(f"restricted solve failed for support {sig}; skipped")
                    continue
            x = np.zeros(n)
            if k:
                x[list(sig)] = z
            if problem.constraint is Constraint.NONNEG and k and np.any(z <= 0.0):
                continue
            if k and np.any(z == 0.0):
                continue  # actual support is smaller; found via its own subset
            if not check_localmin_J0(problem, x, tol):
                continue
            found.append(x)

    # dedup (rank-deficient supports can reproduce earlier points)
    unique = []
    for x in found:
        if not any(np.allclose(x, u, atol=1e-9, rtol=0.0) for u in unique):
            unique.append(x)

    out = []
    for x in unique:
        if relaxation is not None:
            rec = check_localmin_JPsi(problem, relaxation, x, tol)
        else:
            rec = CertRecord(
                support=support(x),
                is_critical_JPsi=None,
                is_localmin_JPsi=None,
                is_localmin_J0=True,
                is_strict=is_strict_minimizer(problem, x),
                max_residual=0.0,
                interval_violations=(),
                boundary_hits=(),
            )
        from .solver import objective_J0
        out.append((x, rec, objective_J0(problem, x)))
    out.sort(key=lambda t: t[2])
    return out
