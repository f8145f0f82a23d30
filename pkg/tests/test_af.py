import math
from types import SimpleNamespace

import numpy as np
import pytest

from reactive_setpoint.af import AfConfig, AfState, af_step, gamma1, gamma2, q_min_modulation
from reactive_setpoint.dq import DqVector
from reactive_setpoint.errors import InvalidArgument, InvalidConfiguration
from reactive_setpoint.inner import modulation_norm_squared
from reactive_setpoint.plant import PlantParams, per_unit_params

THR2 = 0.97 / math.sqrt(2)


def test_gamma1_hard_examples():
    assert gamma1(1.2, 1.0, 0) == pytest.approx(0.2, abs=1e-15)
    assert gamma1(0.8, 1.0, 0) == 0.0


def test_soft_hinge_at_threshold():
    sharp, thr = 8.0, 2.0
    beta = sharp / thr
    # brute force: the softplus integral of the logistic from -inf to 0
    x = np.linspace(-60.0, 0.0, 2_000_001)
    brute = np.trapezoid(1.0 / (1.0 + np.exp(-x)), x) / beta
    got = gamma1(thr, thr, sharp)
    assert got == pytest.approx(math.log(2) / beta, rel=1e-14)
    assert got == pytest.approx(brute, rel=1e-8)


def test_soft_hinge_bounds_and_limit():
    for x in np.linspace(0.0, 3.0, 61):
        hard = gamma1(x, 1.0)
        assert gamma1(x, 1.0, 5.0) >= hard
        assert abs(gamma1(x, 1.0, 1e4) - hard) <= math.log(2) / 1e4 + 1e-15
    assert math.isfinite(gamma1(1e6, 1.0, 50.0))


def test_gamma2_examples():
    assert round(gamma2(0.75, THR2, 0), 4) == 0.0641
    assert gamma2(0.6, 0.6859, 0) == 0.0


def test_gamma2_monotone():
    rng = np.random.default_rng(3)
    for sharp in (0.0, 4.0):
        for a, b in np.sort(rng.uniform(0, 1.5, (1000, 2)), axis=1):
            assert gamma2(a, THR2, sharp) <= gamma2(b, THR2, sharp)


def test_hinge_rejects_negative_threshold():
    with pytest.raises(InvalidArgument):
        gamma1(1.0, -1.0)


def unit_plant(R=1.0, X=1.0):
    return PlantParams(M=1.0, D=0.0, C_dc=1.0, G_dc=0.0, L_g=X, R_g=R, omega0=1.0)


def test_q_min_modulation_example_grid_search():
    p = unit_plant()
    v = DqVector(1.0, 1.0)
    assert q_min_modulation(v, p) == pytest.approx(1.0, rel=1e-15)
    grid = np.linspace(-3, 5, 80001)
    vals = [modulation_norm_squared(0.3, q, v, p, 1.0) for q in grid]
    assert grid[int(np.argmin(vals))] == pytest.approx(1.0, abs=1e-4)


def test_q_min_modulation_lossless():
    p = unit_plant(R=0.0, X=2.5)
    v = DqVector(3.0, -1.0)
    assert q_min_modulation(v, p) == pytest.approx(v.norm_sq() / 2.5, rel=1e-15)


def test_q_min_modulation_zero_impedance():
    z = SimpleNamespace(X_g=0.0, z_norm_sq=0.0)
    with pytest.raises(InvalidArgument):
        q_min_modulation(DqVector(1, 0), z)


def test_q_min_modulation_stationary():
    rng = np.random.default_rng(8)
    for _ in range(200):
        p = unit_plant(R=rng.uniform(0.01, 1), X=rng.uniform(0.1, 3))
        v = DqVector(*rng.uniform(0.5, 2, 2))
        q = q_min_modulation(v, p)
        h = 1e-4
        P_ = rng.uniform(-1, 1)
        fd = (modulation_norm_squared(P_, q + h, v, p, 1.0) - modulation_norm_squared(P_, q - h, v, p, 1.0)) / (2 * h)
        assert abs(fd) < 1e-9


CFG = AfConfig(omega_q=1.0, kappa1=0.1, kappa2=250.0, thr1=1.0)


def test_af_step_fixed_point():
    assert af_step(AfState(3.0), 3.0, 0.5, 0.1, 7.0, 1e-3, CFG) == AfState(3.0)


def test_af_step_single_euler_step():
    assert af_step(AfState(0.0), 1.0, 0.0, 0.0, 0.0, 0.5, CFG).Q_star == 0.5


def test_af_equilibrium_with_modulation_hinge():
    cfg = AfConfig(omega_q=2 * math.pi * 5, kappa1=0.1, kappa2=250.0, thr1=1.0, thr2=THR2)
    m_raw = 0.72
    g2 = gamma2(m_raw, THR2)
    Q_ref, Q_mm = 3e6, 1.2e7
    q_eq = (cfg.omega_q * Q_ref + cfg.kappa2 * g2 * Q_mm) / (cfg.omega_q + cfg.kappa2 * g2)
    st = AfState(0.0)
    for _ in range(200_000):
        st = af_step(st, Q_ref, 0.0, m_raw, Q_mm, 250e-6, cfg)
    assert st.Q_star == pytest.approx(q_eq, rel=1e-9)
    assert abs(q_eq - Q_mm) <= cfg.omega_q * abs(Q_ref - Q_mm) / (cfg.omega_q + cfg.kappa2 * g2) * (1 + 1e-12)


def test_af_first_order_lag():
    cfg = AfConfig(omega_q=2 * math.pi * 5, thr1=1.0)
    dt = 1e-5
    n = int(round(1.0 / cfg.omega_q / dt))
    st = AfState(0.0)
    for _ in range(n):
        st = af_step(st, 1.0, 0.0, 0.0, 0.0, dt, cfg)
    assert st.Q_star == pytest.approx(1 - math.exp(-1), rel=0.02)


def test_af_requires_resolved_threshold():
    with pytest.raises(InvalidArgument):
        af_step(AfState(0.0), 1.0, 0.0, 0.0, 0.0, 1e-3, AfConfig())
    assert AfConfig().for_limits(1234.0).thr1 == 1234.0


def test_af_config_validation():
    with pytest.raises(InvalidConfiguration):
        AfConfig(omega_q=0.0)
    with pytest.warns(UserWarning):
        AfConfig(kappa1=300.0, kappa2=250.0)


def test_default_tuning_values():
    cfg = AfConfig()
    assert cfg.omega_q == pytest.approx(2 * math.pi * 5)
    assert (cfg.kappa1, cfg.kappa2) == (0.1, 250.0)
    assert cfg.thr2 == pytest.approx(0.97 / math.sqrt(2))


def test_default_plant_q_min_is_inductive():
    assert q_min_modulation(DqVector(3150.0, 0.0), per_unit_params()) > 0
