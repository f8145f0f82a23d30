"""
Online feedback optimization of the reactive-power set-point.

The decision is the scalar set-point Q.  At a fixed disturbance
``d = (P_star, v_g)`` the stabilized inner loop maps Q affinely to the grid
current, so the current and modulation limits each cut out an interval of Q.
The controller takes a projected gradient step on

    phi(Q) = 0.5 * (||i||^2 + gamma * (Q - Q_ref)^2)

every ``m = T_s / T_c`` control ticks, using the measured current in place of
the steady-state one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .af import q_min_modulation
from .dq import DqVector
from .errors import InvalidConfiguration
from .inner import Limits, _check_grid, power_to_current
from .plant import PlantParams

_INF = math.inf


@dataclass(frozen=True)
class OfoConfig:
    k_mu: float = 80.0
    k_gamma: float = 4.0
    T_s: float = 1e-3
    T_c: float = 250e-6

    def __post_init__(self):
        if not self.T_s > 0 or not self.T_c > 0:
            raise InvalidConfiguration("sample times must be > 0", "ofo.T_s/timing.T_c")
        ratio = self.T_s / self.T_c
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise InvalidConfiguration(
                f"T_s={self.T_s} must be a positive integer multiple of T_c={self.T_c}",
                "ofo.T_s/timing.T_c",
            )
        if not self.k_mu > 0 or self.k_gamma < 0:
            raise InvalidConfiguration("need k_mu > 0 and k_gamma >= 0", "ofo.k_mu/k_gamma")
        margin = 2.0 - self.C3 * (1.0 + self.C4)
        if not margin > 0:
            raise InvalidConfiguration(
                f"learning rate outside the contraction range: k_mu*T_s*(1 + k_gamma*T_s) = "
                f"{self.C3 * (1.0 + self.C4):.6g} must be < 2 (margin {margin:.6g})",
                "ofo.k_mu",
            )

    @property
    def m(self) -> int:
        return int(round(self.T_s / self.T_c))

    @property
    def C3(self) -> float:
        """Learning-rate scale: mu = C3 * ||v_g||^2."""
        return self.k_mu * self.T_s

    @property
    def C4(self) -> float:
        """Weight scale: gamma = C4 / ||v_g||^2."""
        return self.k_gamma * self.T_s

    @property
    def epsilon(self) -> float:
        """Per-trigger contraction factor 1 - mu*(gamma + 1/||v_g||^2)."""
        return 1.0 - self.C3 * (self.C4 + 1.0)


@dataclass(frozen=True)
class DisturbanceSample:
    P_star: float
    v_g: DqVector


@dataclass(frozen=True)
class FeasibleInterval:
    """Admissible set-points as the intersection of two intervals.

    ``cur_*`` come from the current circle, ``mod_*`` from the modulation
    limit.  An empty modulation interval is stored as ``(+inf, -inf)``.
    When the two do not intersect, ``current_feasible`` is False: the
    current constraint is the one given up.
    """

    cur_lo: float
    cur_hi: float
    mod_lo: float = -_INF
    mod_hi: float = _INF
    current_feasible: bool = True
    modulation_feasible: bool = True

    @classmethod
    def simple(cls, lo: float, hi: float) -> FeasibleInterval:
        return cls(lo, hi, lo, hi)

    @property
    def lo(self) -> float:
        return max(self.cur_lo, self.mod_lo)

    @property
    def hi(self) -> float:
        return min(self.cur_hi, self.mod_hi)

    @property
    def nonempty(self) -> bool:
        return self.current_feasible and self.modulation_feasible and self.lo <= self.hi

    @property
    def degraded(self) -> bool:
        return not self.nonempty


def steady_state_map(Q: float, d: DisturbanceSample) -> DqVector:
    """Unsaturated steady-state grid current at set-point Q."""
    return power_to_current(d.P_star, Q, d.v_g)


def cost(Q: float, d: DisturbanceSample, Q_ref: float, gamma: float) -> float:
    i = steady_state_map(Q, d)
    return 0.5 * (i.norm_sq() + gamma * (Q - Q_ref) ** 2)


def modulation_quadratic(d: DisturbanceSample, p: PlantParams, v_dc_ref: float, m_lim: float):
    """Coefficients (a, b, c) of ``a Q^2 + b Q + c <= 0`` for the modulation limit."""
    n2 = d.v_g.norm_sq()
    a = p.z_norm_sq / n2
    b = -2.0 * p.X_g
    c = n2 - 2.0 * p.R_g * d.P_star + a * d.P_star**2 - (m_lim * v_dc_ref) ** 2
    return a, b, c


def constraint_interval(d: DisturbanceSample, lim: Limits, p: PlantParams, v_dc_ref: float) -> FeasibleInterval:
    n2 = _check_grid(d.v_g, 0.01 * lim.v_g_nom)
    s2 = n2 * lim.i_g_max**2 - d.P_star**2
    cur_ok = s2 >= 0
    a_cur = math.sqrt(max(0.0, s2))

    a, b, c = modulation_quadratic(d, p, v_dc_ref, lim.m_lim)
    if a == 0:
        # zero impedance: the limit does not depend on Q
        mod_ok = c <= 0
        mod_lo, mod_hi = (-_INF, _INF) if mod_ok else (_INF, -_INF)
    else:
        disc = b * b - 4.0 * a * c
        mod_ok = disc >= 0
        if mod_ok:
            centre = -b / (2.0 * a)
            half = math.sqrt(disc) / (2.0 * a)
            mod_lo, mod_hi = centre - half, centre + half
        else:
            mod_lo, mod_hi = _INF, -_INF

    if mod_ok and cur_ok and (mod_lo > a_cur or mod_hi < -a_cur):
        cur_ok = False
    return FeasibleInterval(-a_cur, a_cur, mod_lo, mod_hi, cur_ok, mod_ok)


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def project(Q: float, I: FeasibleInterval, Q_mm: float) -> float:
    """Euclidean projection onto the interval, with modulation-priority fallbacks."""
    if I.nonempty:
        return _clamp(Q, I.lo, I.hi)
    if not I.modulation_feasible:
        return _clamp(Q_mm, I.cur_lo, I.cur_hi)
    # nearest modulation-feasible point to the current interval
    if I.mod_lo > I.cur_hi:
        return I.mod_lo
    if I.mod_hi < I.cur_lo:
        return I.mod_hi
    return _clamp(Q, I.lo, I.hi)


def composite_gradient(Q_star: float, i_meas: DqVector, Q_ref: float, v_g: DqVector, gamma: float) -> float:
    """d phi / d Q with the measured current substituted for the steady-state one."""
    n2 = _check_grid(v_g, 0.0)
    # H^T i = (v^T J i) / ||v||^2
    q_meas = v_g.q * i_meas.d - v_g.d * i_meas.q
    return gamma * (Q_star - Q_ref) + q_meas / n2


def sensitivity(v_g: DqVector) -> DqVector:
    """H = dh/dQ = -J v_g / ||v_g||^2."""
    n2 = _check_grid(v_g, 0.0)
    return DqVector(v_g.q / n2, -v_g.d / n2)


def step_size(v_g: DqVector, cfg: OfoConfig) -> tuple[float, float]:
    """Learning rate and trade-off weight ``(mu, gamma)`` at this grid voltage."""
    n2 = _check_grid(v_g, 0.0)
    return cfg.C3 * n2, cfg.C4 / n2


@dataclass(frozen=True)
class OfoState:
    Q_star: float
    tick_count: int = 0
    last_interval: FeasibleInterval | None = field(default=None)
    triggered: bool = False


def ofo_init(Q_ref: float, d: DisturbanceSample, lim: Limits, p: PlantParams, v_dc_ref: float) -> OfoState:
    """Start at the external reference projected into the admissible set."""
    I = constraint_interval(d, lim, p, v_dc_ref)
    return OfoState(project(Q_ref, I, q_min_modulation(d.v_g, p)), 0, I)


def ofo_step(
    st: OfoState,
    d: DisturbanceSample,
    i_meas: DqVector,
    Q_ref: float,
    lim: Limits,
    p: PlantParams,
    v_dc_ref: float,
    cfg: OfoConfig,
) -> OfoState:
    if st.tick_count % cfg.m != 0:
        return replace(st, tick_count=st.tick_count + 1, triggered=False)
    mu, gamma = step_size(d.v_g, cfg)
    phi = composite_gradient(st.Q_star, i_meas, Q_ref, d.v_g, gamma)
    I = constraint_interval(d, lim, p, v_dc_ref)
    q = project(st.Q_star - mu * phi, I, q_min_modulation(d.v_g, p))
    return OfoState(q, st.tick_count + 1, I, True)
