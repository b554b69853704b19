import numpy as np
import pytest

from brexopt import fidelity as fid
from brexopt.errors import DomainError
from brexopt.fidelity import FidelitySpec, Kind

RNG = np.random.default_rng(20240815)


def sample_points(kind, size):
    """(z, y, b) triples inside the domain of the data term."""
    if kind is Kind.LS:
        return RNG.normal(size=size, scale=3.0), RNG.normal(size=size, scale=2.0), 0.0
    if kind is Kind.LR:
        return RNG.normal(size=size, scale=5.0), (RNG.uniform(size=size) < 0.5).astype(float), 0.0
    b = 0.2
    return RNG.uniform(-b + 1e-3, 5.0, size=size), RNG.uniform(0.0, 3.0, size=size), b


def test_value_examples():
    assert fid.f_value(Kind.LS, 0.0, 0.0) == 0.0
    assert np.isclose(fid.f_value(Kind.LR, 0.0, 1.0), np.log(2.0), atol=1e-12)
    assert np.isclose(fid.f_value(Kind.KL, 0.9, 1.0, 0.1), 1.0, atol=1e-12)


def test_derivative_examples():
    assert np.all(fid.f_d2(Kind.LS, np.array([-4.0, 0.0, 7.0]), 0.0) == 1.0)
    assert np.isclose(fid.f_d1(Kind.LR, 0.0, 0.0), 0.5)
    assert np.isclose(fid.f_d2(Kind.KL, 0.0, 1.0, 0.1), 100.0)


def test_curvature_sup_values():
    assert fid.curvature_sup(Kind.LS, np.array([3.0]))[0] == 1.0
    assert fid.curvature_sup(Kind.LR, np.array([1.0]))[0] == 0.25
    assert np.isclose(fid.curvature_sup(Kind.KL, np.array([2.0]), 0.1)[0], 200.0)


@pytest.mark.parametrize("kind", [Kind.LS, Kind.LR, Kind.KL])
def test_first_derivative_matches_finite_differences(kind):
    z, y, b = sample_points(kind, 10_000)
    h = 1e-6 * np.maximum(1.0, np.abs(z))
    if kind is Kind.KL:
        h = np.minimum(h, (z + b) * 1e-3)
    num = (fid.f_value(kind, z + h, y, b) - fid.f_value(kind, z - h, y, b)) / (2 * h)
    ana = fid.f_d1(kind, z, y, b)
    assert np.max(np.abs(num - ana) / np.maximum(1.0, np.abs(ana))) < 1e-6


@pytest.mark.parametrize("kind", [Kind.LS, Kind.LR, Kind.KL])
def test_second_derivative_matches_finite_differences(kind):
    z, y, b = sample_points(kind, 10_000)
    h = 1e-5 * np.maximum(1.0, np.abs(z))
    if kind is Kind.KL:
        h = np.minimum(h, (z + b) * 2e-3)
    num = (fid.f_d1(kind, z + h, y, b) - fid.f_d1(kind, z - h, y, b)) / (2 * h)
    ana = fid.f_d2(kind, z, y, b)
    assert np.max(np.abs(num - ana) / np.maximum(1.0, np.abs(ana))) < 1e-5


@pytest.mark.parametrize("kind", [Kind.LS, Kind.LR, Kind.KL])
def test_curvature_sup_dominates(kind):
    z, y, b = sample_points(kind, 10_000)
    if kind is Kind.KL:
        z = np.abs(z)  # the sup is taken over the feasible outputs z >= 0
    assert np.all(fid.f_d2(kind, z, y, b) <= fid.curvature_sup(kind, y, b) + 1e-12)


def test_lr_stability():
    z = np.array([-700.0, -100.0, 0.0, 100.0, 700.0])
    for y in (0.0, 1.0):
        v = fid.f_value(Kind.LR, z, y)
        assert np.all(np.isfinite(v))
        assert np.all(v >= -1e-12)


def test_kl_domain_error():
    with pytest.raises(DomainError):
        fid.f_value(Kind.KL, -0.5, 1.0, 0.1)
    with pytest.raises(DomainError):
        fid.f_d2(Kind.KL, -0.2, 1.0, 0.1)


def test_grad_examples():
    spec = FidelitySpec(Kind.LS, np.array([1.0, 2.0]))
    g, _ = fid.grad_F(spec, np.eye(2), np.array([1.0, 2.0]))
    assert np.allclose(g, 0.0, atol=1e-14)
    g, _ = fid.grad_F(spec, np.array([[3.0, 1.0], [1.0, 3.0]]), np.array([0.0, 0.7]))
    assert np.allclose(g, [-0.8, 0.0], atol=1e-12)
    speckl = FidelitySpec(Kind.KL, np.array([1.0]), b=0.1)
    g, _ = fid.grad_F(speckl, np.eye(1), np.array([0.9]))
    assert np.allclose(g, 0.0, atol=1e-14)


@pytest.mark.parametrize("kind", [Kind.LS, Kind.LR, Kind.KL])
def test_grad_matches_finite_differences(kind):
    rng = np.random.default_rng(7)
    m, n = 6, 4
    if kind is Kind.KL:
        A = np.abs(rng.standard_normal((m, n)))
        spec = FidelitySpec(kind, rng.uniform(0.1, 2.0, m), b=0.3)
        x = rng.uniform(0.0, 1.0, n)
    else:
        A = rng.standard_normal((m, n))
        y = (rng.uniform(size=m) < 0.5).astype(float) if kind is Kind.LR \
            else rng.standard_normal(m)
        spec = FidelitySpec(kind, y)
        x = rng.standard_normal(n)
    g, _ = fid.grad_F(spec, A, x)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1e-6
        num = (fid.F_value(spec, A @ (x + e)) - fid.F_value(spec, A @ (x - e))) / 2e-6
        assert abs(num - g[j]) / max(1.0, abs(g[j])) < 1e-6


def test_spectral_norm_against_numpy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = rng.standard_normal((rng.integers(2, 9), rng.integers(2, 9)))
        assert np.isclose(fid.spectral_norm(A), np.linalg.norm(A, 2), rtol=1e-6)
    assert fid.spectral_norm(np.zeros((3, 2))) == 0.0


def test_lipschitz_values():
    assert np.isclose(fid.lipschitz_L(FidelitySpec(Kind.LS, np.zeros(2)), np.eye(2)), 1.0,
                      rtol=1e-8)
    A = np.array([[3.0, 1.0], [1.0, 3.0]])
    assert np.isclose(fid.lipschitz_L(FidelitySpec(Kind.LS, np.zeros(2)), A), 16.0, rtol=1e-8)
    spec = FidelitySpec(Kind.KL, np.ones(2), b=0.1)
    assert np.isclose(fid.lipschitz_L(spec, np.eye(2)), 100.0, rtol=1e-8)
    spec_lr = FidelitySpec(Kind.LR, np.zeros(2))
    assert np.isclose(fid.lipschitz_L(spec_lr, A, lambda2=0.5), 4.5, rtol=1e-8)


def test_spec_validation():
    with pytest.raises(ValueError):
        FidelitySpec(Kind.LR, np.array([0.0, 0.5]))
    with pytest.raises(ValueError):
        FidelitySpec(Kind.KL, np.array([-1.0]), b=0.1)
    with pytest.raises(ValueError):
        FidelitySpec(Kind.KL, np.array([1.0]), b=0.0)
    with pytest.raises(ValueError):
        FidelitySpec(Kind.LS, np.zeros((2, 2)))
