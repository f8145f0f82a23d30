"""
Cascaded anti-windup PI control: speed -> DC link -> current reference -> current.

Every loop is tuned from a bandwidth and damping ratio against its plant
constant (inertia, capacitance or inductance).  The speed and DC-link loops
use conditional integration: the integrator is frozen whenever the output is
saturated and the error would push it further out.  The current integrator
is instead clamped component-wise (a rectangular limiter circumscribing the
modulation circle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dq import ZERO, DqVector, sat_circular, sat_scalar
from .errors import GridLost, InvalidArgument
from .plant import V_DC_REF, V_G_NOM, PlantParams

M_MAX = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class LoopGains:
    Kp: float
    Ki: float
    omega_bw: float
    zeta: float


def gains_from_bandwidth(omega_bw: float, zeta: float, plant_const: float) -> LoopGains:
    """PI gains placing a double pole pair at ``omega_bw`` with damping ``zeta``."""
    for name, val in (("omega_bw", omega_bw), ("zeta", zeta), ("plant_const", plant_const)):
        if not val > 0:
            raise InvalidArgument(f"{name} must be > 0, got {val}")
    return LoopGains(
        Kp=2.0 * zeta * omega_bw * plant_const,
        Ki=omega_bw**2 * plant_const,
        omega_bw=omega_bw,
        zeta=zeta,
    )


@dataclass(frozen=True)
class Limits:
    """Operating limits.

    The power and current ratings are derived so that
    ``P_g_max = tau_max * w_max`` and ``alpha_q * P_g_max`` is the apparent
    power rating.
    """

    tau_max: float = 46691.0
    w_max: float = 125.66
    alpha_q: float = 1.2
    alpha_v: float = 1.1
    v_g_nom: float = V_G_NOM
    m_lim: float = 0.93 / math.sqrt(2.0)

    def __post_init__(self):
        if not self.tau_max > 0 or not self.w_max > 0 or not self.v_g_nom > 0:
            raise InvalidArgument("tau_max, w_max and v_g_nom must be > 0")
        if not self.alpha_q >= 1:
            raise InvalidArgument(f"alpha_q must be >= 1, got {self.alpha_q}")
        if not 0 < self.m_lim <= M_MAX:
            raise InvalidArgument(f"m_lim must lie in (0, 1/sqrt(2)], got {self.m_lim}")

    @property
    def P_g_max(self) -> float:
        return self.tau_max * self.w_max

    @property
    def Q_g_max(self) -> float:
        return self.P_g_max * math.sqrt(self.alpha_q**2 - 1.0)

    @property
    def i_g_max(self) -> float:
        return self.alpha_q * self.P_g_max / self.v_g_nom

    @property
    def v_g_max(self) -> float:
        return self.alpha_v * self.v_g_nom


@dataclass
class ControlStack:
    """Gains, set-points and integrator states of the three PI loops."""

    speed: LoopGains
    dc: LoopGains
    current: LoopGains
    limits: Limits
    w_ref: float = 0.0
    v_dc_ref: float = V_DC_REF
    x_m: float = 0.0
    x_dc: float = 0.0
    x_g: DqVector = field(default=ZERO)

    @classmethod
    def tuned(
        cls,
        p: PlantParams,
        limits: Limits,
        omega_m: float = 2 * math.pi * 2,
        omega_dc: float = 2 * math.pi * 20,
        omega_g: float = 2 * math.pi * 300,
        zeta_m: float = 1.0,
        zeta_dc: float = 1.0,
        zeta_g: float = 1.0,
        **kw,
    ) -> ControlStack:
        return cls(
            speed=gains_from_bandwidth(omega_m, zeta_m, p.M),
            dc=gains_from_bandwidth(omega_dc, zeta_dc, p.C_dc),
            current=gains_from_bandwidth(omega_g, zeta_g, p.L_g),
            limits=limits,
            **kw,
        )

    def x_g_clamp(self) -> float:
        return current_integrator_clamp(self.current, self.v_dc_ref)


def _conditional_pi(err, x, dt, kp, ki, scale, offset, limit):
    # integrator enters the output as -ki*x*scale
    x_new = x + dt * err
    u = (-kp * err - ki * x_new) * scale + offset
    if u > limit and err < 0 or u < -limit and err > 0:
        x_new = x
        u = (-kp * err - ki * x_new) * scale + offset
    return sat_scalar(u, limit), x_new


def speed_pi_step(w, w_ref, x_m, dt, g: LoopGains, tau_max):
    """Speed loop: returns ``(tau_m, x_m')``."""
    return _conditional_pi(w - w_ref, x_m, dt, g.Kp, g.Ki, 1.0, 0.0, tau_max)


def dc_pi_step(v_dc, v_dc_ref, x_dc, tau_m, w_ref, dt, g: LoopGains, P_g_max):
    """DC-link loop with motor-power feed-forward: returns ``(P_g_star, x_dc')``."""
    return _conditional_pi(v_dc - v_dc_ref, x_dc, dt, g.Kp, g.Ki, v_dc_ref, tau_m * w_ref, P_g_max)


def _check_grid(v_g: DqVector, v_floor: float) -> float:
    n2 = v_g.norm_sq()
    if not n2 > 0 or math.sqrt(n2) < v_floor:
        raise GridLost(f"grid voltage magnitude {math.sqrt(n2):.6g} V below floor {v_floor:.6g} V")
    return n2


def power_to_current(P_star: float, Q_star: float, v_g: DqVector, v_floor: float = 0.0) -> DqVector:
    """Unsaturated current realizing (P, Q) at grid voltage ``v_g``."""
    n2 = _check_grid(v_g, v_floor)
    return DqVector((v_g.d * P_star + v_g.q * Q_star) / n2, (v_g.q * P_star - v_g.d * Q_star) / n2)


def current_reference(P_star, Q_star, v_g: DqVector, i_g_max, v_floor: float = 0.01 * V_G_NOM) -> DqVector:
    """Current reference from power set-points through the circular limiter."""
    return sat_circular(power_to_current(P_star, Q_star, v_g, v_floor), i_g_max)


def current_integrator_clamp(g: LoopGains, v_dc_ref: float) -> float:
    """Per-component integrator bound keeping ``Ki*x/v_dc_ref`` inside the 1/sqrt(2) box."""
    return M_MAX * v_dc_ref / g.Ki


def current_pi_step(
    i_g: DqVector,
    i_g_star: DqVector,
    x_g: DqVector,
    v_g: DqVector,
    dt: float,
    g: LoopGains,
    p: PlantParams,
    v_dc_ref: float,
    m_lim: float,
):
    """Current loop: returns ``(m_g, m_g_raw, x_g')``."""
    ed = i_g.d - i_g_star.d
    eq = i_g.q - i_g_star.q
    lim = current_integrator_clamp(g, v_dc_ref)
    xd = min(max(x_g.d + dt * ed, -lim), lim)
    xq = min(max(x_g.q + dt * eq, -lim), lim)
    z = p.z_apply(i_g_star)
    raw = DqVector(
        (v_g.d - z.d + g.Kp * ed + g.Ki * xd) / v_dc_ref,
        (v_g.q - z.q + g.Kp * eq + g.Ki * xq) / v_dc_ref,
    )
    return sat_circular(raw, m_lim), raw, DqVector(xd, xq)


def modulation_norm_squared(P, Q, v_g: DqVector, p: PlantParams, v_dc_ref: float) -> float:
    """Steady-state ``||m_g||^2`` when the current loop tracks (P, Q) exactly."""
    n2 = _check_grid(v_g, 0.0)
    e2 = n2 - 2.0 * p.R_g * P - 2.0 * p.X_g * Q + p.z_norm_sq / n2 * (P * P + Q * Q)
    return e2 / v_dc_ref**2


def steady_state_modulation(P, Q, v_g: DqVector, p: PlantParams, v_dc_ref: float) -> DqVector:
    """Feed-forward part of the current loop at the unsaturated reference."""
    i = power_to_current(P, Q, v_g)
    z = p.z_apply(i)
    return DqVector((v_g.d - z.d) / v_dc_ref, (v_g.q - z.q) / v_dc_ref)


__all__ = [
    "LoopGains",
    "Limits",
    "ControlStack",
    "gains_from_bandwidth",
    "speed_pi_step",
    "dc_pi_step",
    "power_to_current",
    "current_reference",
    "current_integrator_clamp",
    "current_pi_step",
    "modulation_norm_squared",
    "steady_state_modulation",
]
