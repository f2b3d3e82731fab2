import numpy as np
import pytest
from hypothesis import given, strategies as st

from binmfg.core import (ModelParams, conditional_mean, consistency_F, optimal_rate,
                         population_mean, value_function, z_gap)

unit = st.floats(-1, 1, allow_nan=False)
eps_s = st.floats(0.01, 1.0)
T_s = st.floats(0.05, 10.0)


def P(T=1.0, eps=0.5, m0=0.25):
    return ModelParams(T, eps, m0)


@pytest.mark.parametrize("bad", [dict(T=0), dict(T=-1), dict(eps=0), dict(eps=1.2), dict(m0=1.5)])
def test_params_validation(bad):
    kw = dict(T=1.0, eps=0.5, m0=0.0) | bad
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_z_gap_examples():
    p = P(T=1.0)
    assert z_gap(1.0, 0.5, 0.5, p) == pytest.approx(2.0)
    assert z_gap(0.0, -0.5, 0.5, p) == 0.0
    assert z_gap(0.0, 0.5, 0.5, p) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        z_gap(1.5, 0.5, 0.5, p)


def test_value_function_examples():
    p = P(T=1.0)
    assert value_function(1.0, 1, 0.5, 0.5, p) == pytest.approx(-1.0)
    assert value_function(1.0, -1, 0.5, 0.5, p) == pytest.approx(1.0)
    assert value_function(0.0, -1, 0.5, 0.5, p) == pytest.approx(0.0)


def test_optimal_rate_examples():
    p = P(T=1.0)
    assert optimal_rate(0.3, 1, 0.5, 0.5, p) == 0.0
    assert optimal_rate(0.3, -1, -0.5, 0.5, p) == 0.0
    assert optimal_rate(0.0, -1, 0.5, 0.5, p) == pytest.approx(1.0)


def test_conditional_mean_examples():
    assert conditional_mean(0.0, 0.3, 0.7, P(m0=0.25)) == pytest.approx(0.25)
    assert conditional_mean(0.4, 0.5, 0.2, P(m0=1.0)) == pytest.approx(1.0)
    assert conditional_mean(1.0, 0.5, 0.5, P(T=1.0, m0=0.25)) == pytest.approx(0.8125)
    # frozen when m + y = 0
    assert conditional_mean(0.7, -0.5, 0.5, P(m0=0.3)) == pytest.approx(0.3)


def test_population_mean_examples():
    p = ModelParams(1.0, 0.42, 0.1)
    assert population_mean(0.0, 0.6, p) == pytest.approx(0.1)
    # any consistency root is reproduced at t = T
    from binmfg.equilibrium import find_equilibria
    for e in find_equilibria(p):
        assert population_mean(p.T, e.m, p) == pytest.approx(e.m, abs=1e-12)


def test_consistency_F_examples():
    assert consistency_F(0.0, P(m0=0.0)) == 0.0
    assert consistency_F(0.3, ModelParams(1e-9, 0.5, 0.25)) == pytest.approx(-0.05, abs=1e-8)


def test_consistency_F_continuous_at_boundary():
    p = P(T=2.0, eps=0.4, m0=0.3)
    for b in (p.eps, -p.eps):
        left = consistency_F(b - 1e-12, p)
        right = consistency_F(b + 1e-12, p)
        assert consistency_F(b, p, side=1) == pytest.approx(consistency_F(b, p, side=-1), abs=1e-15)
        assert left == pytest.approx(right, abs=1e-9)


@given(T=T_s, eps=eps_s, m0=unit, m=unit, y_sign=st.sampled_from([-1, 1]), x=st.sampled_from([-1, 1]))
def test_terminal_and_gap_consistency(T, eps, m0, m, y_sign, x):
    p = ModelParams(T, eps, m0)
    y = y_sign * eps
    assert value_function(T, x, y, m, p) == pytest.approx(-x * (m + y), abs=1e-15)
    for t in (0.0, 0.37 * T, T):
        gap = value_function(t, -1, y, m, p) - value_function(t, 1, y, m, p)
        assert gap == pytest.approx(z_gap(t, y, m, p), abs=1e-12)
        assert optimal_rate(t, x, y, m, p) >= 0
        assert abs(conditional_mean(t, y, m, p)) <= 1 + 1e-12


@given(T=T_s, eps=eps_s, m0=unit, m=unit)
def test_symmetry_of_residual(T, eps, m0, m):
    p = ModelParams(T, eps, m0)
    q = ModelParams(T, eps, -m0)
    assert consistency_F(-m, q) == pytest.approx(-consistency_F(m, p), abs=1e-12)


@given(T=T_s, eps=eps_s, m0=unit, m=unit, y_sign=st.sampled_from([-1, 1]), frac=st.floats(0.01, 0.99))
def test_ode_residuals(T, eps, m0, m, y_sign, frac):
    """Central differences in t against the gap, value and Kolmogorov equations."""
    p = ModelParams(T, eps, m0)
    y = y_sign * eps
    h = 1e-4
    t = min(max(frac * T, h), T - h)
    z = z_gap(t, y, m, p)
    dz = (z_gap(t + h, y, m, p) - z_gap(t - h, y, m, p)) / (2 * h)
    assert dz == pytest.approx(0.5 * z * abs(z), abs=1e-6)
    mu = conditional_mean(t, y, m, p)
    dmu = (conditional_mean(t + h, y, m, p) - conditional_mean(t - h, y, m, p)) / (2 * h)
    assert dmu == pytest.approx(-mu * abs(z) + z, abs=1e-6)
    for x in (-1, 1):
        dv = (value_function(t + h, x, y, m, p) - value_function(t - h, x, y, m, p)) / (2 * h)
        assert dv == pytest.approx(0.5 * optimal_rate(t, x, y, m, p) ** 2, abs=1e-6)
