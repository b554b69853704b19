import numpy as np
import pytest

from brexopt.datagen import DataGenConfig, gen_kl, gen_lr, gen_ls, generate, make_problem
from brexopt.fidelity import Kind


def test_determinism():
    for kind, fn in [(Kind.LS, gen_ls), (Kind.LR, gen_lr), (Kind.KL, gen_kl)]:
        cfg = DataGenConfig(kind=kind, m=20, n=30, k=5, eta=0.4, seed=1234)
        a1, y1, x1 = fn(cfg)
        a2, y2, x2 = fn(cfg)
        assert np.array_equal(a1, a2) and np.array_equal(y1, y2) and np.array_equal(x1, x2)
        a3, _, _ = fn(DataGenConfig(kind=kind, m=20, n=30, k=5, eta=0.4, seed=1235))
        assert not np.array_equal(a1, a3)


def test_ls_columns_unit_norm():
    for eta in [0.0, 0.9]:
        cfg = DataGenConfig(kind=Kind.LS, m=40, n=25, k=5, eta=eta, seed=7)
        A, _, _ = gen_ls(cfg)
        assert np.allclose(np.linalg.norm(A, axis=0), 1.0, atol=1e-12)


def test_ls_truth_structure():
    cfg = DataGenConfig(kind=Kind.LS, m=30, n=50, k=9, eta=0.5, seed=3)
    _, _, x = gen_ls(cfg)
    nz = x[x != 0.0]
    assert nz.size == 9
    assert np.all(np.abs(nz) == 1.0)


def test_ls_snr_matches_target():
    # Monte-Carlo check of the noise-power formula over 100 seeds
    tau = 8.0
    snrs = []
    for seed in range(100):
        cfg = DataGenConfig(kind=Kind.LS, m=60, n=40, k=6, eta=0.6, tau=tau, seed=seed)
        A, y, x = gen_ls(cfg)
        clean = A @ x
        noise = y - clean
        snrs.append(10.0 * np.log10(np.sum(clean**2) / np.sum(noise**2)))
    assert abs(np.mean(snrs) - tau) < 1.0


def test_lr_labels_binary_and_calibrated():
    cfg = DataGenConfig(kind=Kind.LR, m=4000, n=30, k=5, eta=0.0, s=1e-9, seed=11)
    _, y, _ = gen_lr(cfg)
    assert set(np.unique(y)) <= {0.0, 1.0}
    assert abs(np.mean(y) - 0.5) < 0.05  # s -> 0: coin flips
    # unit-norm columns make <a_m, x> ~ sqrt(k/m); s must beat that scale
    cfg_hi = DataGenConfig(kind=Kind.LR, m=4000, n=30, k=5, eta=0.0, s=2e4, seed=11)
    A, y_hi, x = gen_lr(cfg_hi)
    hits = np.mean((A @ x > 0) == (y_hi == 1.0))
    assert hits > 0.99  # saturated sigmoid: labels follow the sign


def test_lr_support_equispaced():
    cfg = DataGenConfig(kind=Kind.LR, m=10, n=20, k=4, seed=0)
    _, _, x = gen_lr(cfg)
    assert np.array_equal(np.nonzero(x)[0], [0, 5, 10, 15])
    assert np.all(x[x != 0.0] == 1.0)


def test_kl_nonnegativity_and_domain():
    cfg = DataGenConfig(kind=Kind.KL, m=25, n=15, k=4, seed=5)
    A, y, x = gen_kl(cfg)
    assert np.all(A >= 0.0) and np.all(y >= 0.0) and np.all(x >= 0.0)
    # fidelity domain holds at x = 0: A @ 0 + b > 0
    problem, _ = make_problem(cfg, lambda0_scale=1e-3)
    assert problem.lambda0 > 0


def test_kl_high_gain_limit():
    cfg = DataGenConfig(kind=Kind.KL, m=50, n=20, k=5, alpha=1e6, seed=9)
    A, y, x = gen_kl(cfg)
    mean = A @ x + cfg.b
    assert np.max(np.abs(y - mean) / mean) < 0.01


def test_kl_poisson_mean():
    # E[y] = A x + b, averaged over many seeds, within 3 standard errors
    cfg0 = DataGenConfig(kind=Kind.KL, m=8, n=6, k=3, alpha=50.0, seed=1000)
    A, _, x = gen_kl(cfg0)
    mean = A @ x + cfg0.b
    reps = 1000
    acc = np.zeros(cfg0.m)
    for i in range(reps):
        rng = np.random.default_rng(5000 + i)
        acc += rng.poisson(cfg0.alpha * mean) / cfg0.alpha
    avg = acc / reps
    se = np.sqrt(mean / cfg0.alpha / reps)
    assert np.all(np.abs(avg - mean) <= 3.0 * se + 1e-9)


def test_generate_dispatch_and_validation():
    assert generate(DataGenConfig(kind=Kind.LS, m=5, n=4, k=2, seed=0))[0].shape == (5, 4)
    with pytest.raises(ValueError):
        DataGenConfig(kind=Kind.LS, m=5, n=4, k=5, seed=0)
    with pytest.raises(ValueError):
        DataGenConfig(kind=Kind.LS, m=5, n=4, k=2, eta=1.0, seed=0)
