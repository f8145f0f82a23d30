import math

import numpy as np
import pytest

from reactive_setpoint.dq import DqVector
from reactive_setpoint.errors import (
    AssumptionViolated,
    Infeasible,
    InsufficientTimescaleSeparation,
    InvalidArgument,
    NoContraction,
)
from reactive_setpoint.inner import Limits
from reactive_setpoint.ofo import DisturbanceSample, FeasibleInterval
from reactive_setpoint.oracle import (
    ConvergenceRecord,
    InnerLoopConstants,
    corollary1_asymptote,
    estimate_inner_loop_constants,
    golden_section,
    optimal_q_analytic,
    optimal_q_bruteforce,
    psi_metric,
    theorem1_check,
    theorem1_rhs,
)

D = DisturbanceSample(2e6, DqVector(3150.0, 0.0))
WIDE = FeasibleInterval.simple(-1e7, 1e7)


def test_analytic_large_weight_tracks_reference():
    assert optimal_q_analytic(D, 3e6, 1e6, WIDE) == pytest.approx(3e6, rel=1e-9)


def test_analytic_zero_weight_minimizes_current():
    assert optimal_q_analytic(D, 3e6, 0.0, WIDE) == 0.0
    assert optimal_q_analytic(D, 3e6, 0.0, FeasibleInterval.simple(1e5, 2e5)) == 1e5


def test_empty_interval_is_infeasible():
    empty = FeasibleInterval(-1.0, 1.0, 2.0, 5.0, current_feasible=False)
    with pytest.raises(Infeasible):
        optimal_q_analytic(D, 0.0, 1.0, empty)
    with pytest.raises(Infeasible):
        optimal_q_bruteforce(D, 0.0, 1.0, empty)


def test_bruteforce_near_flat_objective():
    huge = DisturbanceSample(0.0, DqVector(1e9, 0.0))
    q = optimal_q_bruteforce(huge, 0.0, 0.0, FeasibleInterval.simple(-1.0, 1.0))
    assert abs(q) <= 2.0 / 1000


def test_bruteforce_vertex_inside():
    gamma = 1e-7
    q_true = optimal_q_analytic(D, 3e6, gamma, WIDE)
    assert -1e7 < q_true < 1e7
    assert optimal_q_bruteforce(D, 3e6, gamma, WIDE) == pytest.approx(q_true, abs=1e-6 * 1e7)


def test_bruteforce_vertex_outside():
    I = FeasibleInterval.simple(4e6, 5e6)
    assert optimal_q_bruteforce(D, 3e6, 1e-7, I) == pytest.approx(4e6, abs=1e-6 * 1e6)
    with pytest.raises(InvalidArgument):
        optimal_q_bruteforce(D, 3e6, 1e-7, I, n_grid=2)


def test_golden_section_on_hand_built_quadratic():
    assert golden_section(lambda x: (x - 0.3) ** 2 + 4, -2.0, 5.0) == pytest.approx(0.3, abs=1e-6)


def test_psi_metric_examples():
    assert psi_metric(3, 3) == 0
    assert psi_metric(3, 1) == 2


def test_constants_exact_exponential():
    e = 5.0 * 0.8 ** np.arange(60)
    c = estimate_inner_loop_constants(e)
    assert c.C1 * math.exp(-c.C2) == pytest.approx(0.8, abs=1e-10)
    assert c.C1 == pytest.approx(1.0, abs=1e-10)
    assert c.C1_fit == pytest.approx(5.0 / e[0], abs=1e-10)


def test_constants_with_noise():
    k = np.arange(80)
    truth = -math.log(0.85)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        e = 3.0 * np.exp(-truth * k) * (1 + 0.01 * rng.standard_normal(k.size))
        c = estimate_inner_loop_constants(e)
        assert c.C2 == pytest.approx(truth, rel=0.05)
        # the admissible C1 bounds every sample
        assert np.all(e <= c.C1 * e[0] * np.exp(-c.C2 * k) * (1 + 1e-12))


def test_constants_flat_response():
    with pytest.raises(AssumptionViolated):
        estimate_inner_loop_constants(np.ones(50))


def test_constants_input_errors():
    with pytest.raises(InvalidArgument):
        estimate_inner_loop_constants([])
    with pytest.raises(InvalidArgument):
        estimate_inner_loop_constants(0.5 ** np.arange(10))


CONSTS = InnerLoopConstants(C1=1.2, C2=1.5, C3=0.08)


def rec(k, psi, **kw):
    base = dict(epsilon=0.92, delta_Qopt=0.0, inner_residual=0.0, v_norm=3150.0)
    base.update(kw)
    return ConvergenceRecord(k=k, psi=psi, **base)


def test_theorem1_stationary_case():
    recs = [rec(4 * n, 0.0, inner_residual=1.0) for n in range(10)]
    rep = theorem1_check(recs, CONSTS, 4)
    assert rep.passed and rep.fraction == 1.0 and rep.worst_margin > 0


def test_theorem1_detects_violation_and_skips_gaps():
    recs = [rec(0, 100.0), rec(4, 50.0), rec(8, 60.0), rec(16, 10.0)]
    rep = theorem1_check(recs, CONSTS, 4)
    # 0->4 holds, 4->8 fails (60 > 46), 8->16 is skipped
    assert (rep.n_checked, rep.n_satisfied, rep.n_skipped) == (2, 1, 1)
    assert not rep.passed
    assert rep.worst_margin == pytest.approx(0.92 * 50 - 60)
    assert rep.max_contraction == pytest.approx(60 / 50)


def test_theorem1_rhs_terms():
    r = rec(0, 10.0, delta_Qopt=-3.0, inner_residual=2.0, v_norm=100.0)
    assert theorem1_rhs(r, CONSTS) == pytest.approx(0.92 * 10 + 3 + 1.2 * 0.08 * 100 * 2 * math.exp(-1.5))


LIM = Limits()


def test_corollary_examples():
    assert corollary1_asymptote(InnerLoopConstants(0.0, 1.0, 0.08), 0.9, 0.0, LIM, 4) == 0.0
    assert corollary1_asymptote(InnerLoopConstants(0.0, 1.0, 0.08), 0.5, 10.0, LIM, 4) == pytest.approx(20.0)


def test_corollary_errors():
    with pytest.raises(NoContraction):
        corollary1_asymptote(CONSTS, 1.0, 0.0, LIM, 4)
    with pytest.raises(InsufficientTimescaleSeparation):
        corollary1_asymptote(InnerLoopConstants(100.0, 0.1, 0.08), 0.5, 0.0, LIM, 4)
