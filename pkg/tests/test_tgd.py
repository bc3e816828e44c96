import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from quadsparse.errors import DivergenceError, InvalidArgument
from quadsparse.init_quadratic import initialize
from quadsparse.linalg import soft_threshold
from quadsparse.sensing import generate_instance, risk_gradient
from quadsparse.tgd import TGDConfig, tau, tau_from_residuals, tgd_run, tgd_step


def test_config_validation():
    TGDConfig(eta=0.049)
    for bad in (dict(eta=0.0), dict(eta=0.05), dict(C_tau=0.0), dict(T_max=-1)):
        with pytest.raises(InvalidArgument):
            TGDConfig(**bad)


def test_tau_zero_at_truth():
    inst = generate_instance(10, 3, 40, 0.8, seed=0)
    assert tau(inst, inst.x0) == pytest.approx(0.0, abs=1e-14)


def test_tau_homogeneous_in_residuals():
    res = np.array([0.3, -1.0, 2.0])
    x = np.array([1.0, 2.0])
    t1 = tau_from_residuals(res, x, 3, 2, 2.0)
    t2 = tau_from_residuals(2 * res, x, 3, 2, 2.0)  # residual sum of squares times 4
    assert t2**2 == pytest.approx(4 * t1**2, rel=1e-14)


@given(st.integers(0, 2**31))
def test_tau_matches_loop(seed):
    inst = generate_instance(5, 2, 6, 0.8, sigma=0.1, mode="materialized", seed=seed)
    x = np.random.default_rng(seed).standard_normal(5)
    want = oracles.tau(inst.ensemble.data.tolist(), inst.b.tolist(), x.tolist(), 2.0)
    assert tau(inst, x, 2.0) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_step_fixed_point_and_zero_step():
    inst = generate_instance(10, 3, 60, 0.8, seed=1)
    assert np.allclose(tgd_step(inst, inst.x0, TGDConfig()), inst.x0, atol=1e-12)
    x = np.random.default_rng(0).standard_normal(10)
    assert np.array_equal(tgd_step(inst, x, SimpleNamespace(eta=0.0, C_tau=2.0)), x)


def test_step_is_composition():
    inst = generate_instance(5, 2, 6, 0.8, sigma=0.1, mode="materialized", seed=7)
    x = np.random.default_rng(7).standard_normal(5)
    cfg = TGDConfig(eta=0.03, C_tau=1.5)
    want = soft_threshold(x - 0.03 * risk_gradient(inst, x), 0.03 * tau(inst, x, 1.5))
    assert np.allclose(tgd_step(inst, x, cfg), want, rtol=1e-14, atol=1e-15)


def test_step_without_threshold_is_gradient_descent():
    inst = generate_instance(6, 2, 12, 0.8, seed=3)
    x = np.random.default_rng(3).standard_normal(6)
    # C_tau -> 0 makes the truncation level vanish
    out = tgd_step(inst, x, SimpleNamespace(eta=0.01, C_tau=0.0))
    assert np.allclose(out, x - 0.01 * risk_gradient(inst, x), rtol=1e-15, atol=0)


def test_divergence_guard():
    inst = generate_instance(10, 2, 30, 0.8, seed=0)
    with pytest.raises(DivergenceError) as info:
        tgd_run(inst, 50 * np.ones(10), TGDConfig(eta=0.049, T_max=200))
    assert info.value.trace.stop_reason == "diverged"
    assert len(info.value.trace.iterates) >= 2


def test_run_deterministic_and_consistent():
    inst = generate_instance(40, 3, 600, 0.8, seed=2)
    x = initialize(inst).x_init
    a = tgd_run(inst, x, TGDConfig(T_max=30))
    b = tgd_run(inst, x, TGDConfig(T_max=30))
    assert all(np.array_equal(u, v) for u, v in zip(a.iterates, b.iterates))
    assert len(a.iterates) == len(a.errors) == len(a.risks) == 31
    assert all(math.isfinite(r) for r in a.risks)


def test_risk_mostly_decreases():
    inst = generate_instance(60, 3, 1500, 0.8, seed=4)
    tr = tgd_run(inst, initialize(inst).x_init, TGDConfig(T_max=200))
    steps = np.diff(tr.risks)
    assert np.mean(steps <= 0) >= 0.95
