"""
Multi-rate closed-loop simulation.

Time is kept as integer counts: the plant advances in steps of ``dt_plant``,
the PI stack and activation-function loop run every control tick
(``substeps`` plant steps) and the OFO loop acts on every ``m``-th tick.
The simulated time of tick ``k`` is always ``k * T_c``, never an accumulated
sum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import af as _af
from . import ofo as _ofo
from .config import SimConfig
from .dq import DqVector, instantaneous_power
from .errors import SimulationDiverged
from .inner import (
    ControlStack,
    current_pi_step,
    current_reference,
    dc_pi_step,
    power_to_current,
    speed_pi_step,
)
from .oracle import (
    ConvergenceRecord,
    InnerLoopConstants,
    corollary1_asymptote,
    estimate_inner_loop_constants,
    optimal_q_analytic,
    psi_metric,
    theorem1_check,
)
from .plant import PlantState, integrate
from .scenarios import Scenario, build_scenario, held_time

log = logging.getLogger(__name__)

# (name, unit) in CSV column order
COLUMNS = (
    ("t", "s"),
    ("w", "rad/s"),
    ("w_ref", "rad/s"),
    ("v_dc", "V"),
    ("tau_m", "N*m"),
    ("tau_l", "N*m"),
    ("m_norm", "1"),
    ("m_raw_norm", "1"),
    ("m_limit", "1"),
    ("i_norm", "A"),
    ("i_star_norm", "A"),
    ("i_g_max", "A"),
    ("P_star", "W"),
    ("Q_measured", "var"),
    ("Q_ref", "var"),
    ("Q_star", "var"),
    ("v_g_norm", "V"),
    ("P_measured", "W"),
    ("current_feasible", "bool"),
    ("modulation_feasible", "bool"),
    ("ofo_trigger", "bool"),
    ("tripped", "bool"),
)
COLUMN_NAMES = tuple(c for c, _ in COLUMNS)
_FLAGS = {"current_feasible", "modulation_feasible", "ofo_trigger", "tripped"}


@dataclass
class ScenarioTrace:
    """Column-oriented per-tick record of a run."""

    columns: dict
    n_rows: int

    @classmethod
    def empty(cls, n: int) -> ScenarioTrace:
        cols = {}
        for name in COLUMN_NAMES:
            cols[name] = np.zeros(n, dtype=bool) if name in _FLAGS else np.full(n, np.nan)
        return cls(cols, 0)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name][: self.n_rows]

    def __len__(self) -> int:
        return self.n_rows

    def truncate(self, n: int) -> None:
        self.n_rows = n


@dataclass
class TriggerSample:
    """What the OFO saw at one trigger, for the convergence analysis."""

    k: int
    Q_before: float
    Q_after: float
    Q_ref: float
    d: _ofo.DisturbanceSample
    i_meas: DqVector
    i_prev: DqVector
    interval: _ofo.FeasibleInterval


@dataclass
class RunResult:
    trace: ScenarioTrace
    metrics: dict
    triggers: list = field(default_factory=list)
    error: Exception | None = None


def initial_state(cfg: SimConfig, sc: Scenario, stack: ControlStack, Q0: float):
    """Plant and integrator states at the equilibrium of the t=0 operating point."""
    p, lim = cfg.plant, cfg.limits
    w = float(sc.w_ref(0.0))
    tau_l = float(sc.tau_l(0.0))
    v_g = DqVector(float(sc.v_g(0.0)), 0.0)
    tau = min(max(tau_l + p.D * w, -lim.tau_max), lim.tau_max)
    P = tau * w + p.G_dc * cfg.v_dc_ref**2
    i = current_reference(P, Q0, v_g, lim.i_g_max)
    for _ in range(50):
        P_new = tau * w + p.G_dc * cfg.v_dc_ref**2 + p.R_g * i.norm_sq()
        P_new = min(max(P_new, -lim.P_g_max), lim.P_g_max)
        i = current_reference(P_new, Q0, v_g, lim.i_g_max)
        if abs(P_new - P) <= 1e-12 * max(1.0, abs(P)):
            break
        P = P_new
    stack.x_m = -tau / stack.speed.Ki
    stack.x_dc = -(P - tau * w) / (stack.dc.Ki * cfg.v_dc_ref)
    return PlantState(w=w, v_dc=cfg.v_dc_ref, i_g=i), P


def _disturbances(cfg: SimConfig, sc: Scenario, n_steps: int):
    """Grid voltage and load torque at every plant step, plus the times used for set-points."""
    dt = cfg.timing.dt_plant
    steps = np.arange(n_steps, dtype=np.int64)
    if cfg.scenario.assumption3_mode:
        t = held_time(steps, cfg.timing.substeps * cfg.m, dt)
    else:
        t = steps * dt
    v = np.asarray(sc.v_g(t), dtype=float)
    tau = np.asarray(sc.tau_l(t), dtype=float)
    return v, tau, t


def run_scenario(cfg: SimConfig, hard_stop: bool = False, collect_triggers: bool | None = None) -> RunResult:
    """Simulate one scenario.

    A DC-link collapse below the configured floor stops the run with a
    truncated trace and ``result.error`` set; :func:`run_or_raise` re-raises.
    """
    p, lim, tm = cfg.plant, cfg.limits, cfg.timing
    sc = build_scenario(cfg.scenario, lim)
    n_ticks = cfg.n_ticks
    nsub = tm.substeps
    m = cfg.m
    mode = cfg.outer_mode
    if collect_triggers is None:
        collect_triggers = mode == "ofo"
    t_c = tm.T_c
    v_ref = cfg.v_dc_ref
    prot = cfg.protection
    v_floor = prot.v_dc_floor * v_ref
    grid_floor = prot.grid_floor * lim.v_g_nom
    af_cfg = cfg.af.for_limits(lim.i_g_max)

    stack = ControlStack.tuned(
        p, lim, cfg.tuning.omega_m, cfg.tuning.omega_dc, cfg.tuning.omega_g,
        cfg.tuning.zeta_m, cfg.tuning.zeta_dc, cfg.tuning.zeta_g, v_dc_ref=v_ref,
    )  # fmt: skip

    # disturbance arrays cover one extra tick so the last row has a sample
    v_arr, tau_arr, t_arr = _disturbances(cfg, sc, (n_ticks + 1) * nsub)
    tick_t = t_arr[:: nsub]
    q_ref_arr = np.asarray(sc.Q_ref(tick_t), dtype=float)
    w_ref_arr = np.asarray(sc.w_ref(tick_t), dtype=float)

    v0 = DqVector(float(v_arr[0]), 0.0)
    Q_ref0 = float(q_ref_arr[0])
    ofo_state = None
    if mode == "ofo":
        # P_star is not known before the state is initialised; iterate once
        s0, P0 = initial_state(cfg, sc, stack, Q_ref0)
        ofo_state = _ofo.ofo_init(Q_ref0, _ofo.DisturbanceSample(P0, v0), lim, p, v_ref)
        # trigger one tick after each hold boundary, so the measured current
        # was produced under the disturbance the step is computed for
        ofo_state = replace(ofo_state, tick_count=m - 1)
        Q_star = ofo_state.Q_star
    else:
        Q_star = Q_ref0
    s, _ = initial_state(cfg, sc, stack, Q_star)
    af_state = _af.AfState(Q_star)

    trace = ScenarioTrace.empty(n_ticks + 1)
    c = trace.columns
    triggers = []
    tripped = False
    trip_time = None
    m_raw_prev = None
    i_prev = s.i_g
    error = None
    held_d = None
    interval = None
    vq_zero = np.zeros(nsub)

    for k in range(n_ticks + 1):
        j = k * nsub
        v_g = DqVector(float(v_arr[j]), 0.0)
        w_ref = float(w_ref_arr[k])
        Q_ref = float(q_ref_arr[k])

        tau_cmd, stack.x_m = speed_pi_step(s.w, w_ref, stack.x_m, t_c, stack.speed, lim.tau_max)
        motor_on = not (tripped and prot.trip_action == "block_motor")
        tau_m = tau_cmd if motor_on else 0.0
        P_star, stack.x_dc = dc_pi_step(s.v_dc, v_ref, stack.x_dc, tau_m, w_ref, t_c, stack.dc, lim.P_g_max)

        trig = False
        if mode == "af":
            i_raw = power_to_current(P_star, af_state.Q_star, v_g, grid_floor)
            if m_raw_prev is None:
                m_raw_prev = current_pi_step(
                    s.i_g, i_raw, stack.x_g, v_g, t_c, stack.current, p, v_ref, lim.m_lim
                )[1].norm()
            af_state = _af.af_step(
                af_state, Q_ref, i_raw.norm(), m_raw_prev, _af.q_min_modulation(v_g, p), t_c, af_cfg
            )
            Q_star = af_state.Q_star
        elif mode == "ofo":
            if ofo_state.tick_count % m == 0:
                held_d = _ofo.DisturbanceSample(P_star, v_g)
            d = held_d
            before = ofo_state.Q_star
            ofo_state = _ofo.ofo_step(ofo_state, d, s.i_g, Q_ref, lim, p, v_ref, cfg.ofo)
            Q_star = ofo_state.Q_star
            trig = ofo_state.triggered
            interval = ofo_state.last_interval
            if trig and collect_triggers:
                triggers.append(TriggerSample(k, before, Q_star, Q_ref, d, s.i_g, i_prev, interval))
        else:
            Q_star = Q_ref

        i_star = current_reference(P_star, Q_star, v_g, lim.i_g_max, grid_floor)
        m_g, m_raw, stack.x_g = current_pi_step(
            s.i_g, i_star, stack.x_g, v_g, t_c, stack.current, p, v_ref, lim.m_lim
        )
        m_raw_prev = m_raw.norm()
        P_meas, Q_meas = instantaneous_power(v_g, s.i_g)

        c["t"][k] = k * t_c
        c["w"][k] = s.w
        c["w_ref"][k] = w_ref
        c["v_dc"][k] = s.v_dc
        c["tau_m"][k] = tau_m
        c["tau_l"][k] = tau_arr[j]
        c["m_norm"][k] = m_g.norm()
        c["m_raw_norm"][k] = m_raw_prev
        c["m_limit"][k] = lim.m_lim
        c["i_norm"][k] = s.i_g.norm()
        c["i_star_norm"][k] = i_star.norm()
        c["i_g_max"][k] = lim.i_g_max
        c["P_star"][k] = P_star
        c["Q_measured"][k] = Q_meas
        c["Q_ref"][k] = Q_ref
        c["Q_star"][k] = Q_star
        c["v_g_norm"][k] = v_g.norm()
        c["P_measured"][k] = P_meas
        if interval is not None:
            c["current_feasible"][k] = interval.current_feasible
            c["modulation_feasible"][k] = interval.modulation_feasible
        else:
            c["current_feasible"][k] = True
            c["modulation_feasible"][k] = True
        c["ofo_trigger"][k] = trig
        c["tripped"][k] = tripped
        trace.n_rows = k + 1

        if not tripped and abs(s.v_dc - v_ref) > prot.trip_band * v_ref:
            tripped = True
            trip_time = k * t_c
            log.info("DC-link trip at t=%.4f s (v_dc=%.1f V)", trip_time, s.v_dc)
            if prot.trip_action == "stop" or hard_stop:
                break

        if k == n_ticks:
            break
        i_prev = s.i_g
        tau_applied = 0.0 if tripped and prot.trip_action == "block_motor" else tau_m
        try:
            s = integrate(
                s, tau_applied, m_g,
                tau_arr[j : j + nsub], v_arr[j : j + nsub], vq_zero,
                p, tm.dt_plant, v_floor, j,
            )  # fmt: skip
        except SimulationDiverged as exc:
            error = exc
            log.warning("simulation diverged: %s", exc)
            break

    metrics = compute_metrics(trace, cfg, trip_time)
    if error is not None:
        metrics["diverged"] = str(error)
    return RunResult(trace, metrics, triggers, error)


def run_or_raise(cfg: SimConfig, **kw) -> RunResult:
    res = run_scenario(cfg, **kw)
    if res.error is not None:
        raise res.error
    return res


def compute_metrics(trace: ScenarioTrace, cfg: SimConfig, trip_time) -> dict:
    lim = cfg.limits
    t_c = cfg.timing.T_c
    if len(trace) == 0:
        return {"rows": 0}
    i_norm = trace["i_norm"]
    m_raw = trace["m_raw_norm"]
    m_sat = m_raw > lim.m_lim
    w = trace["w"]
    q_err = trace["Q_measured"] - trace["Q_ref"]
    return {
        "rows": len(trace),
        "outer_mode": cfg.outer_mode,
        "scenario": cfg.scenario.kind,
        "max_m_raw_norm": float(np.max(m_raw)),
        "max_m_norm": float(np.max(trace["m_norm"])),
        "time_modulation_saturated": float(np.count_nonzero(m_sat) * t_c),
        "time_current_above_limit": float(np.count_nonzero(i_norm > lim.i_g_max) * t_c),
        "max_i_norm": float(np.max(i_norm)),
        "max_i_ratio": float(np.max(i_norm) / lim.i_g_max),
        "v_dc_min": float(np.min(trace["v_dc"])),
        "v_dc_max": float(np.max(trace["v_dc"])),
        "max_abs_w": float(np.max(np.abs(w))),
        "overspeed": bool(np.max(np.abs(w)) > cfg.protection.overspeed * lim.w_max),
        "q_tracking_rms": float(np.sqrt(np.mean(q_err**2))),
        "trip": trip_time is not None,
        "trip_time": trip_time,
    }


# ---------------------------------------------------------------------------
# convergence analysis


def identify(cfg: SimConfig, dQ: float | None = None, n_ticks: int = 40) -> np.ndarray:
    """Tracking-error response ``||i_g(k) - i_g*(k)||`` to a set-point step.

    Starts from the equilibrium of the scenario's initial operating point
    with disturbances frozen and the outer loop disabled, then steps the
    reactive-power set-point by ``dQ`` (default 1% of the apparent-power
    rating).
    """
    p, lim, tm = cfg.plant, cfg.limits, cfg.timing
    sc = build_scenario(cfg.scenario, lim)
    stack = ControlStack.tuned(
        p, lim, cfg.tuning.omega_m, cfg.tuning.omega_dc, cfg.tuning.omega_g,
        cfg.tuning.zeta_m, cfg.tuning.zeta_dc, cfg.tuning.zeta_g, v_dc_ref=cfg.v_dc_ref,
    )  # fmt: skip
    Q0 = float(sc.Q_ref(0.0))
    if cfg.outer_mode == "ofo":
        _, P0 = initial_state(cfg, sc, stack, Q0)
        Q0 = _ofo.ofo_init(Q0, _ofo.DisturbanceSample(P0, DqVector(float(sc.v_g(0.0)), 0.0)), lim, p, cfg.v_dc_ref).Q_star
    s, _ = initial_state(cfg, sc, stack, Q0)
    if dQ is None:
        dQ = 0.01 * lim.alpha_q * lim.P_g_max
    Q = Q0 + dQ
    v_g = DqVector(float(sc.v_g(0.0)), 0.0)
    w_ref = float(sc.w_ref(0.0))
    nsub = tm.substeps
    tau_l = np.full(nsub, float(sc.tau_l(0.0)))
    vd = np.full(nsub, v_g.d)
    vq = np.zeros(nsub)
    out = np.empty(n_ticks)
    for k in range(n_ticks):
        tau_m, stack.x_m = speed_pi_step(s.w, w_ref, stack.x_m, tm.T_c, stack.speed, lim.tau_max)
        P, stack.x_dc = dc_pi_step(s.v_dc, cfg.v_dc_ref, stack.x_dc, tau_m, w_ref, tm.T_c, stack.dc, lim.P_g_max)
        i_star = current_reference(P, Q, v_g, lim.i_g_max)
        out[k] = (s.i_g - i_star).norm()
        m_g, _, stack.x_g = current_pi_step(s.i_g, i_star, stack.x_g, v_g, tm.T_c, stack.current, p, cfg.v_dc_ref, lim.m_lim)
        s = integrate(s, tau_m, m_g, tau_l, vd, vq, p, tm.dt_plant)
    return out


def convergence_records(triggers: list, cfg: SimConfig) -> list:
    """Per-trigger psi, epsilon, optimum drift and tracking residual."""
    recs = []
    opts = []
    for tr in triggers:
        _, gamma = _ofo.step_size(tr.d.v_g, cfg.ofo)
        if tr.interval.nonempty:
            opts.append(optimal_q_analytic(tr.d, tr.Q_ref, gamma, tr.interval))
        else:
            opts.append(math.nan)
    for n, tr in enumerate(triggers):
        mu, gamma = _ofo.step_size(tr.d.v_g, cfg.ofo)
        n2 = tr.d.v_g.norm_sq()
        eps = 1.0 - mu * (gamma + 1.0 / n2)
        nxt = opts[n + 1] if n + 1 < len(opts) else opts[n]
        i_star = _ofo.steady_state_map(tr.Q_before, tr.d)
        recs.append(
            ConvergenceRecord(
                k=tr.k,
                psi=psi_metric(tr.Q_before, opts[n]),
                epsilon=eps,
                delta_Qopt=opts[n] - nxt,
                inner_residual=(tr.i_prev - i_star).norm(),
                v_norm=math.sqrt(n2),
            )
        )
    return recs


def convergence_report(result: RunResult, cfg: SimConfig, consts: InnerLoopConstants | None = None) -> dict:
    """Theorem and corollary checks for an OFO run.

    PASS/FAIL semantics apply only when the scenario holds disturbances
    between triggers; otherwise the satisfaction rate is telemetry.
    """
    if consts is None:
        consts = estimate_inner_loop_constants(identify(cfg), C3=cfg.ofo.C3)
    recs = [r for r in convergence_records(result.triggers, cfg) if math.isfinite(r.psi)]
    rep = theorem1_check(recs, consts, cfg.m, psi_floor=1e-6 * cfg.limits.alpha_q * cfg.limits.P_g_max)
    psi = np.array([r.psi for r in recs]) if recs else np.zeros(0)
    eps_max = max((abs(r.epsilon) for r in recs), default=0.0)
    dq_max = max((abs(r.delta_Qopt) for r in recs), default=0.0)
    out = {
        "C1": consts.C1,
        "C1_fit": consts.C1_fit,
        "C2": consts.C2,
        "C3": consts.C3,
        "fit_residual": consts.residual,
        "epsilon_max": eps_max,
        "delta_Qopt_max": dq_max,
        "theorem1": rep.as_dict(),
        "assumption3": cfg.scenario.assumption3_mode,
    }
    try:
        bound = corollary1_asymptote(consts, eps_max, dq_max, cfg.limits, cfg.m)
        tail = psi[len(psi) // 2 :]
        out["corollary1_bound"] = bound
        out["psi_tail_sup"] = float(np.max(tail)) if tail.size else 0.0
        out["corollary1_holds"] = bool(out["psi_tail_sup"] <= bound)
    except (ValueError, RuntimeError) as exc:
        out["corollary1_error"] = str(exc)
    if cfg.scenario.assumption3_mode:
        out["verdict"] = "PASS" if rep.passed else "FAIL"
    else:
        out["verdict"] = "telemetry"
    return out
