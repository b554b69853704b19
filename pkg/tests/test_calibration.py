import json

import numpy as np
import pytest

from brexopt import fidelity as fid
from brexopt.calibration import (GeneratorKind, Mode, calibrate, gamma_threshold,
                                 generic_threshold, relaxation_from_gammas)
from brexopt.errors import CalibrationError
from brexopt.fidelity import FidelitySpec, Kind
from brexopt.problem import ProblemSpec
from conftest import random_problem

RNG = np.random.default_rng(77)


def test_threshold_examples(fig_ls, fig_lr):
    assert np.isclose(gamma_threshold(fig_ls, GeneratorKind.power(2.0), 0), 10.0)
    assert np.isclose(gamma_threshold(fig_lr, GeneratorKind.power(2.0), 0), 1.35)


def test_zero_column_sentinel():
    A = np.array([[1.0, 0.0], [2.0, 0.0]])
    pr = ProblemSpec(FidelitySpec(Kind.LS, np.array([1.0, 1.0])), A, lambda0=0.5)
    assert gamma_threshold(pr, GeneratorKind.power(2.0), 1) == 0.0
    rel, report = calibrate(pr, GeneratorKind.power(2.0))
    assert report.gamma_thr[1] == 0.0
    assert rel.generators[1] is None


def test_unsupported_pairing(fig_ls):
    with pytest.raises(CalibrationError):
        gamma_threshold(fig_ls, GeneratorKind.shannon(), 0)
    with pytest.raises(CalibrationError):
        gamma_threshold(fig_ls, GeneratorKind.klgen(), 0)
    with pytest.raises(CalibrationError):
        gamma_threshold(fig_ls, GeneratorKind.matched(), 0)


@pytest.mark.parametrize("kind,psis", [
    (Kind.LS, [GeneratorKind.power(2.0), GeneratorKind.power(1.5), GeneratorKind.power(4 / 3)]),
    (Kind.LR, [GeneratorKind.power(2.0), GeneratorKind.power(1.5)]),
    (Kind.KL, [GeneratorKind.power(2.0), GeneratorKind.power(1.5),
               GeneratorKind.shannon(), GeneratorKind.klgen(),
               GeneratorKind.klgen(y=1.7)]),
])
def test_closed_form_matches_generic(kind, psis):
    # spec cross-check: both routes agree wherever both are defined
    count = 0
    while count < 100:
        m, n = int(RNG.integers(2, 7)), int(RNG.integers(2, 7))
        pr = random_problem(kind, RNG, m, n)
        psi = psis[count % len(psis)]
        j = int(RNG.integers(0, n))
        t_closed = gamma_threshold(pr, psi, j)
        t_generic = generic_threshold(pr, psi, j)
        assert abs(t_closed - t_generic) <= 1e-8 * max(t_closed, 1e-12), (kind, psi)
        count += 1


def test_threshold_monotonicity():
    y = np.array([1.0, 0.5])
    for psi in [GeneratorKind.power(2.0), GeneratorKind.power(1.5)]:
        prev = 0.0
        for scale in [0.5, 1.0, 2.0, 4.0]:
            A = scale * np.array([[1.0], [2.0]])
            pr = ProblemSpec(FidelitySpec(Kind.LS, y), A, lambda0=0.3)
            t = gamma_threshold(pr, psi, 0)
            assert t > prev
            prev = t
        prev = 0.0
        for lam2 in [0.0, 0.1, 1.0]:
            pr = ProblemSpec(FidelitySpec(Kind.LS, y), np.array([[1.0], [2.0]]),
                             lambda0=0.3, lambda2=lam2)
            t = gamma_threshold(pr, psi, 0)
            assert t > prev or (lam2 == 0.0 and t == prev)
            prev = t


def cc_second_derivative(problem, relaxation, n, t, x_base):
    """g''(t) of the 1D restriction through x_base along coordinate n."""
    a = problem.column(n)
    x = x_base.copy()
    x[n] = 0.0
    z = problem.A @ x + t * a
    f2 = fid.f_d2(problem.fidelity.kind, z, problem.fidelity.y, problem.fidelity.b)
    g = relaxation.generators[n]
    return float(np.sum(a**2 * f2)) - float(g.psi_d2(t)) + problem.lambda2


@pytest.mark.parametrize("kind,psi", [
    (Kind.LS, GeneratorKind.power(2.0)),
    (Kind.LS, GeneratorKind.power(1.5)),
    (Kind.LR, GeneratorKind.power(2.0)),
    (Kind.KL, GeneratorKind.power(2.0)),
    (Kind.KL, GeneratorKind.shannon()),
    (Kind.KL, GeneratorKind.klgen()),
])
def test_concavity_condition_on_grid(kind, psi):
    rng = np.random.default_rng(5)
    pr = random_problem(kind, rng, 4, 3, lambda0=0.2)
    for mode, margin, bound in [(Mode.AT_THRESHOLD, 0.0, 1e-9), (Mode.STRICT, 0.1, -1e-12)]:
        rel, report = calibrate(pr, psi, mode, margin)
        assert np.all(report.exact)
        for n in range(pr.n):
            g = rel.generators[n]
            if g is None:
                continue
            ts = np.linspace(g.alpha_minus if g.alpha_minus < 0 else g.alpha_plus * 1e-3,
                             g.alpha_plus, 1000)
            ts = ts[np.abs(ts) > 1e-12]
            if pr.constraint.value == "nonneg":
                x_base = np.abs(rng.standard_normal(pr.n))
            else:
                x_base = rng.standard_normal(pr.n)
            vals = [cc_second_derivative(pr, rel, n, float(t), x_base) for t in ts]
            assert max(vals) <= bound, (kind, psi, mode, max(vals))


def test_strict_margin_zero_equals_threshold(fig_ls):
    rel_a, rep_a = calibrate(fig_ls, GeneratorKind.power(2.0), Mode.AT_THRESHOLD)
    rel_s, rep_s = calibrate(fig_ls, GeneratorKind.power(2.0), Mode.STRICT, margin=0.0)
    assert np.allclose(rep_a.gamma, rep_s.gamma)


def test_calibrate_fig_ls(fig_ls):
    rel, report = calibrate(fig_ls, GeneratorKind.power(2.0))
    assert np.allclose(report.gamma, [10.0, 10.0])
    assert np.allclose(report.column_norms, [10.0, 10.0])
    assert all(report.exact)


def test_report_json_roundtrip(fig_ls):
    _rel, report = calibrate(fig_ls, GeneratorKind.power(2.0), Mode.STRICT, margin=0.25)
    doc = json.loads(report.to_json())
    assert doc["schema"] == 1
    assert doc["mode"] == "strict"
    assert np.allclose(doc["gamma"], np.asarray(doc["gamma_thr"]) * 1.25)


def test_relaxation_from_gammas(fig_ls):
    rel = relaxation_from_gammas(fig_ls, GeneratorKind.power(2.0), np.array([5.0, 0.0]))
    assert rel.generators[0].gamma == 5.0
    assert rel.generators[1] is None
    with pytest.raises(ValueError):
        relaxation_from_gammas(fig_ls, GeneratorKind.power(2.0), np.array([1.0]))


def test_matched_calibration_1d():
    pr = ProblemSpec(FidelitySpec(Kind.LS, np.array([1.0])), np.array([[2.0]]), lambda0=1.0)
    rel, report = calibrate(pr, GeneratorKind.matched(a=2.0), Mode.AT_THRESHOLD)
    # matched LS: psi'' = gamma a^2, rhs = ||a||^2 -> gamma_hat = 1
    assert np.isclose(report.gamma_thr[0], 1.0, rtol=1e-8)
