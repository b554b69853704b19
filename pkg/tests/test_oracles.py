import numpy as np

from brexopt.generating import KLGenerator, PowerGenerator, ShannonGenerator, bregman_d
from brexopt.oracles import (GridSpec, default_grid, oracle_beta, oracle_convexity,
                             oracle_s_transform, oracle_s_value)

GENS = [
    PowerGenerator(p=2.0, gamma=1.5, lambda0=0.5),
    PowerGenerator(p=1.5, gamma=0.8, lambda0=0.4),
    ShannonGenerator(gamma=1.0, lambda0=0.7),
    KLGenerator(y=1.0, b=0.2, gamma=0.9, lambda0=0.3),
]


def test_grid_refinement_stability():
    # refining the grid by 10x moves the oracle by < 1e-7
    for g in GENS:
        lo = g.alpha_minus - 1.0 if g.alpha_minus < 0 else 0.0
        hi = g.alpha_plus + 1.0
        for x in np.linspace(lo if lo < 0 else 0.0, hi - 0.5, 7):
            coarse = oracle_beta(g, float(x), GridSpec(lo, hi, 2001))
            fine = oracle_beta(g, float(x), GridSpec(lo, hi, 20001))
            assert abs(coarse - fine) < 1e-7


def test_s_transform_sign_and_zero():
    for g in GENS:
        assert oracle_s_value(g, 0.0) == 0.0
        for u in np.linspace(0.01, 3.0, 17):
            assert oracle_s_value(g, float(u)) <= 0.0


def test_s_transform_composition_matches_beta():
    for g in GENS:
        lo = g.alpha_minus - 0.4 if g.alpha_minus < 0 else 0.0
        for x in np.linspace(lo, g.alpha_plus + 0.6, 15):
            direct = float(np.asarray(g.beta(float(x))))
            composed = oracle_s_transform(g, float(x))
            assert abs(direct - composed) < 1e-4


def test_convexity_oracle():
    xs = np.linspace(-2, 2, 101)
    assert oracle_convexity(xs**2)
    assert not oracle_convexity(np.where(xs == 0.0, 0.0, 1.0))  # counting penalty
    assert oracle_convexity(np.abs(xs))


def test_grid_spec_validation():
    import pytest
    with pytest.raises(ValueError):
        GridSpec(1.0, 0.0)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, points=2)


def test_default_grid_covers_query():
    g = GENS[0]
    grid = default_grid(g, x=5.0)
    assert grid.lo <= g.alpha_minus and grid.hi >= 5.0
