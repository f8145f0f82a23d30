"""
Numerical self-checks: optimizer equivalence, gradient and modulation
identities, convergence bounds, capability-map geometry and determinism.

Each ``check_*`` function returns a :class:`CheckResult` with the measured
quantity and the tolerance it was compared against.  The CLI ``verify``
subcommand runs them all.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .config import SimConfig
from .dq import DqVector
from .inner import modulation_norm_squared, steady_state_modulation
from .af import q_min_modulation
from .ofo import (
    DisturbanceSample,
    OfoConfig,
    OfoState,
    composite_gradient,
    constraint_interval,
    cost,
    ofo_step,
    steady_state_map,
    step_size,
)
from .oracle import optimal_q_analytic, optimal_q_bruteforce
from .outputs import trace_csv
from .pqmap import pq_capability_map
from .scenarios import ScenarioSpec
from .simulate import convergence_report, run_scenario


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}: {self.value:.3g} (tol {self.tolerance:.3g}) {self.detail}".rstrip()


def random_instance(rng: np.random.Generator, cfg: SimConfig, gamma_scale: float | None = None):
    """A random disturbance, reference, weight and its feasible interval.  Retries until nonempty."""
    lim, p = cfg.limits, cfg.plant
    while True:
        mag = rng.uniform(0.6, 1.1) * lim.v_g_nom
        ang = rng.uniform(-math.pi, math.pi)
        v = DqVector(mag * math.cos(ang), mag * math.sin(ang))
        d = DisturbanceSample(rng.uniform(-0.95, 0.95) * lim.P_g_max, v)
        I = constraint_interval(d, lim, p, cfg.v_dc_ref)
        if not I.nonempty:
            continue
        k_gamma = gamma_scale if gamma_scale is not None else 10 ** rng.uniform(-1, 3)
        Q_ref = rng.uniform(-1.5, 1.5) * lim.alpha_q * lim.P_g_max
        return d, Q_ref, k_gamma, I


def _fixed_point(d, Q_ref, ocfg: OfoConfig, cfg: SimConfig, tol: float, max_iter: int = 5000) -> float:
    # every call triggers: reset the tick counter and feed the steady-state current
    lim, p = cfg.limits, cfg.plant
    q = 0.0
    for _ in range(max_iter):
        st = ofo_step(OfoState(q), d, steady_state_map(q, d), Q_ref, lim, p, cfg.v_dc_ref, ocfg)
        if abs(st.Q_star - q) <= 1e-3 * tol:
            return st.Q_star
        q = st.Q_star
    return q


def check_oracle_equivalence(n: int = 1000, seed: int = 1, cfg: SimConfig | None = None) -> list[CheckResult]:
    cfg = cfg or SimConfig()
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst_fp = worst_bf = 0.0
    for _ in range(n):
        d, Q_ref, k_gamma, I = random_instance(rng, cfg)
        ocfg = replace(cfg.ofo, k_gamma=k_gamma)
        _, gamma = step_size(d.v_g, ocfg)
        q_opt = optimal_q_analytic(d, Q_ref, gamma, I)
        tol = cfg.limits.i_g_max * d.v_g.norm()
        q_fp = _fixed_point(d, Q_ref, ocfg, cfg, 1e-6 * tol)
        worst_fp = max(worst_fp, abs(q_fp - q_opt) / tol)
        q_bf = optimal_q_bruteforce(d, Q_ref, gamma, I)
        worst_bf = max(worst_bf, abs(q_bf - q_opt) / (I.hi - I.lo))
    dt = time.perf_counter() - t0
    return [
        CheckResult("ofo fixed point = analytic optimum", worst_fp <= 1e-6, worst_fp, 1e-6,
                    "(|dQ| / (i_g_max*||v_g||))", dt),
        CheckResult("analytic optimum = brute force", worst_bf <= 1e-4, worst_bf, 1e-4, "(|dQ| / width)", dt),
        CheckResult("oracle runtime [s]", dt < 10.0, dt, 10.0),
    ]


def check_gradient(n: int = 1000, seed: int = 2, cfg: SimConfig | None = None) -> CheckResult:
    cfg = cfg or SimConfig()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        d, Q_ref, k_gamma, I = random_instance(rng, cfg)
        gamma = k_gamma * cfg.ofo.T_s / d.v_g.norm_sq()
        Q = rng.uniform(I.lo, I.hi)
        h = 1e3  # the cost is quadratic, so only rounding limits the step
        fd = (cost(Q + h, d, Q_ref, gamma) - cost(Q - h, d, Q_ref, gamma)) / (2 * h)
        g = composite_gradient(Q, steady_state_map(Q, d), Q_ref, d.v_g, gamma)
        worst = max(worst, abs(g - fd) / max(abs(fd), 1e-300))
    return CheckResult("composite gradient = finite difference", worst < 1e-8, worst, 1e-8, "(relative)")


def check_modulation_identity(n: int = 1000, seed: int = 3, cfg: SimConfig | None = None) -> list[CheckResult]:
    cfg = cfg or SimConfig()
    p, lim = cfg.plant, cfg.limits
    rng = np.random.default_rng(seed)
    worst = worst_fd = 0.0
    for _ in range(n):
        d, _, _, _ = random_instance(rng, cfg)
        Q = rng.uniform(-1.2, 1.2) * lim.alpha_q * lim.P_g_max
        a = modulation_norm_squared(d.P_star, Q, d.v_g, p, cfg.v_dc_ref)
        b = steady_state_modulation(d.P_star, Q, d.v_g, p, cfg.v_dc_ref).norm_sq()
        worst = max(worst, abs(a - b) / b)
        # stationarity at Q_mm, relative to the slope one rating away
        q_mm = q_min_modulation(d.v_g, p)
        h = 1e3
        f = lambda q: modulation_norm_squared(d.P_star, q, d.v_g, p, cfg.v_dc_ref)
        g0 = (f(q_mm + h) - f(q_mm - h)) / (2 * h)
        s = lim.alpha_q * lim.P_g_max
        g1 = (f(q_mm + s + h) - f(q_mm + s - h)) / (2 * h)
        worst_fd = max(worst_fd, abs(g0) / abs(g1))
    return [
        CheckResult("modulation identity", worst <= 1e-10, worst, 1e-10, "(relative)"),
        CheckResult("modulation stationary at Q_mm", worst_fd < 1e-9, worst_fd, 1e-9, "(slope ratio)"),
    ]


def frozen_config(duration: float = 1.0, Q_ref: float = 3.0e6, tau_l_frac: float = 0.5) -> SimConfig:
    """OFO run at a constant operating point, starting away from the optimum."""
    spec = ScenarioSpec(kind="custom", duration=duration, assumption3_mode=True, tau_l_frac=tau_l_frac, Q_ref=Q_ref)
    return SimConfig(outer_mode="ofo", scenario=spec)


def check_theorem1(cfg: SimConfig | None = None) -> list[CheckResult]:
    cfg = cfg or frozen_config()
    t0 = time.perf_counter()
    res = run_scenario(cfg)
    rep = convergence_report(res, cfg)
    dt = time.perf_counter() - t0
    th = rep["theorem1"]
    eps = cfg.ofo.epsilon
    return [
        CheckResult("one-trigger recursion bound satisfied", th["passed"], th["fraction"], 1.0,
                    f"({th['n_satisfied']}/{th['n_checked']}, worst margin {th['worst_margin']:.3g})", dt),
        CheckResult("per-trigger contraction", th["max_contraction"] <= eps + 0.01, th["max_contraction"],
                    eps + 0.01, f"(epsilon {eps:.4f})", dt),
    ]


def check_corollary1(cfg: SimConfig | None = None) -> CheckResult:
    if cfg is None:
        cfg = SimConfig(outer_mode="ofo", scenario=ScenarioSpec(kind="voltage_dip", assumption3_mode=True))
    t0 = time.perf_counter()
    rep = convergence_report(run_scenario(cfg), cfg)
    dt = time.perf_counter() - t0
    bound = rep.get("corollary1_bound", math.nan)
    sup = rep.get("psi_tail_sup", math.nan)
    ok = bool(rep.get("corollary1_holds", False))
    return CheckResult("asymptotic tail bound", ok, sup, bound, rep.get("corollary1_error", ""), dt)


def pq_endpoint_residuals(cfg: SimConfig, n_P: int = 201):
    """Asymmetry measures and the worst constraint residual over all band endpoints."""
    lim, p = cfg.limits, cfg.plant
    v = DqVector(lim.v_g_nom, 0.0)
    rows = [r for r in pq_capability_map(lim, p, cfg.v_dc_ref, v, n_P) if not r.empty]
    n2 = v.norm_sq()
    m2 = lim.m_lim**2
    worst = 0.0
    for r in rows:
        for q in (r.Q_lo, r.Q_hi):
            rc = (r.P**2 + q**2) / (n2 * lim.i_g_max**2) - 1.0
            rm = modulation_norm_squared(r.P, q, v, p, cfg.v_dc_ref) / m2 - 1.0
            # both satisfied, and at least one of them active
            worst = max(worst, rc, rm, min(abs(rc), abs(rm)))
    cap = min(abs(r.Q_lo) for r in rows)
    ind = max(r.Q_hi for r in rows)
    return cap, ind, worst


def check_pqmap(cfg: SimConfig | None = None) -> list[CheckResult]:
    cfg = cfg or SimConfig()
    cap, ind, worst = pq_endpoint_residuals(cfg)
    return [
        CheckResult("capacitive side narrower", cap < ind, cap / ind, 1.0, "(min |Q_lo| / max Q_hi)"),
        CheckResult("band endpoints on constraints", worst <= 1e-9, worst, 1e-9, "(relative)"),
    ]


def trace_hash(cfg: SimConfig) -> str:
    return hashlib.sha256(trace_csv(run_scenario(cfg).trace).encode()).hexdigest()


def check_determinism(cfg: SimConfig | None = None, n_ticks: int = 10**6) -> list[CheckResult]:
    """Hash equality of two identical runs, then a long OFO run checked tick by tick.

    The long run must give ``t[k] == k * T_c`` exactly at every row and fire
    the OFO trigger on every ``m``-th tick and no other.
    """
    cfg = cfg or SimConfig(outer_mode="ofo", scenario=ScenarioSpec(kind="reference_step", duration=3.0))
    same = trace_hash(cfg) == trace_hash(cfg)
    t_c = cfg.timing.T_c
    long = SimConfig(
        outer_mode="ofo",
        scenario=ScenarioSpec(kind="custom", duration=n_ticks * t_c, tau_l_frac=0.5, Q_ref=1.0e6),
    )
    t0 = time.perf_counter()
    tr = run_scenario(long, collect_triggers=False).trace
    dt = time.perf_counter() - t0
    k = np.arange(len(tr))
    drift = int(np.count_nonzero(tr["t"] != k * t_c))
    fired = np.flatnonzero(tr["ofo_trigger"])
    expected = np.arange(1, len(tr), long.m)
    missed = int(len(np.setxor1d(fired, expected))) if len(tr) == n_ticks + 1 else n_ticks + 1
    return [
        CheckResult("identical trace hashes", same, float(same), 1.0),
        CheckResult(f"tick/time drift over {n_ticks} ticks", drift == 0 and len(tr) == n_ticks + 1,
                    float(drift), 0.0, "(rows with t != k*T_c)", dt),
        CheckResult("OFO trigger schedule", missed == 0, float(missed), 0.0, "(ticks off the m-tick grid)", dt),
    ]


def run_all(quick: bool = False) -> list[CheckResult]:
    n = 200 if quick else 1000
    out = []
    out += check_oracle_equivalence(n)
    out.append(check_gradient(n))
    out += check_modulation_identity(n)
    out += check_theorem1()
    out.append(check_corollary1())
    out += check_pqmap()
    out += check_determinism(n_ticks=10**5 if quick else 10**6)
    return out
