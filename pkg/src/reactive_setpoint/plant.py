"""
Average-switch model of a back-to-back drive.

State is the rigid shaft speed, the DC-link voltage and the grid current in
dq coordinates.  The motor torque is taken as perfectly tracking its command,
so the motor side appears only through its power draw ``w * tau_m`` on the
DC link.

Default parameters
------------------
The physical constants are derived from ratings on a 7 MVA base:

    Z_b   = v_g_nom**2 / S_b                  (3150 V dq magnitude)
    L_g   = l_pu * Z_b / omega0
    R_g   = r_pu * Z_b
    C_dc  = 2 * H_c * S_b / v_dc_ref**2       (H_c capacitor inertia constant)
    G_dc  = g_pu * S_b / v_dc_ref**2
    M     = T_mech * P_mech / w_nom**2
    D     = d_pu * P_mech / w_nom**2
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dq import DqVector
from .errors import InvalidArgument, SimulationDiverged

S_BASE = 7.0e6
V_G_NOM = 3150.0
V_DC_REF = 5000.0
OMEGA0 = 2.0 * math.pi * 50.0
P_MECH = 6.0e6
W_NOM = 125.66


@dataclass(frozen=True)
class PlantParams:
    M: float
    D: float
    C_dc: float
    G_dc: float
    L_g: float
    R_g: float
    omega0: float = OMEGA0

    def __post_init__(self):
        for name in ("M", "C_dc", "L_g", "omega0"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("D", "G_dc", "R_g"):
            if not getattr(self, name) >= 0:
                raise InvalidArgument(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def X_g(self) -> float:
        """Grid reactance omega0 * L_g."""
        return self.omega0 * self.L_g

    @property
    def z_norm_sq(self) -> float:
        # Z_g = R I + X J has both singular values equal to sqrt(R^2 + X^2)
        return self.R_g**2 + self.X_g**2

    def z_apply(self, i: DqVector) -> DqVector:
        """Z_g @ i with Z_g = [[R, -X], [X, R]]."""
        x = self.X_g
        return DqVector(self.R_g * i.d - x * i.q, x * i.d + self.R_g * i.q)

    def euler_margin(self, dt: float) -> float:
        """dt * (R/L + omega0); explicit Euler on the current needs this < 2."""
        return dt * (self.R_g / self.L_g + self.omega0)


def per_unit_params(
    l_pu: float = 0.15,
    r_pu: float = 0.005,
    h_c: float = 0.030,
    g_pu: float = 0.001,
    t_mech: float = 1.0,
    d_pu: float = 0.005,
    s_base: float = S_BASE,
    v_g_nom: float = V_G_NOM,
    v_dc_ref: float = V_DC_REF,
    omega0: float = OMEGA0,
    p_mech: float = P_MECH,
    w_nom: float = W_NOM,
) -> PlantParams:
    z_b = v_g_nom**2 / s_base
    return PlantParams(
        M=t_mech * p_mech / w_nom**2,
        D=d_pu * p_mech / w_nom**2,
        C_dc=2.0 * h_c * s_base / v_dc_ref**2,
        G_dc=g_pu * s_base / v_dc_ref**2,
        L_g=l_pu * z_b / omega0,
        R_g=r_pu * z_b,
        omega0=omega0,
    )


@dataclass(frozen=True)
class PlantState:
    w: float
    v_dc: float
    i_g: DqVector


@dataclass(frozen=True)
class PlantInputs:
    tau_m: float
    m_g: DqVector
    tau_l: float
    v_g: DqVector


def plant_derivatives(s: PlantState, u: PlantInputs, p: PlantParams):
    """Time derivatives ``(dw, dv_dc, di_g)`` of the drive model."""
    if not s.v_dc > 0:
        raise SimulationDiverged(f"DC-link voltage must be positive, got {s.v_dc}")
    dw = (-p.D * s.w + u.tau_m - u.tau_l) / p.M
    dv = (-p.G_dc * s.v_dc - (s.w / s.v_dc) * u.tau_m + u.m_g.dot(s.i_g)) / p.C_dc
    zi = p.z_apply(s.i_g)
    di = DqVector(
        (-zi.d + u.v_g.d - u.m_g.d * s.v_dc) / p.L_g,
        (-zi.q + u.v_g.q - u.m_g.q * s.v_dc) / p.L_g,
    )
    return dw, dv, di


def plant_step(
    s: PlantState,
    u: PlantInputs,
    p: PlantParams,
    dt: float,
    v_dc_floor: float = 0.0,
    step: int | None = None,
) -> PlantState:
    """One forward-Euler step of length ``dt``."""
    if not dt > 0:
        raise InvalidArgument(f"dt must be > 0, got {dt}")
    dw, dv, di = plant_derivatives(s, u, p)
    v_dc = s.v_dc + dt * dv
    if not v_dc > v_dc_floor:
        raise SimulationDiverged(f"DC-link voltage {v_dc:.6g} V at or below floor {v_dc_floor:.6g} V", step)
    return PlantState(
        w=s.w + dt * dw,
        v_dc=v_dc,
        i_g=DqVector(s.i_g.d + dt * di.d, s.i_g.q + dt * di.q),
    )


def integrate(
    s: PlantState,
    tau_m: float,
    m_g: DqVector,
    tau_l,
    v_g_d,
    v_g_q,
    p: PlantParams,
    dt: float,
    v_dc_floor: float = 0.0,
    step0: int = 0,
) -> PlantState:
    """Run ``len(tau_l)`` Euler steps with held commands.

    The disturbance sequences give the load torque and grid voltage at each
    sub-step.  Arithmetic is the same as repeated :func:`plant_step`, unrolled
    on floats for speed; the results are bit-identical.
    """
    w, v, i_d, i_q = s.w, s.v_dc, s.i_g.d, s.i_g.q
    M, D, C, G, L, R, X = p.M, p.D, p.C_dc, p.G_dc, p.L_g, p.R_g, p.X_g
    md, mq = m_g.d, m_g.q
    for n in range(len(tau_l)):
        if not v > 0:
            raise SimulationDiverged(f"DC-link voltage must be positive, got {v}", step0 + n)
        dw = (-D * w + tau_m - tau_l[n]) / M
        dv = (-G * v - (w / v) * tau_m + (md * i_d + mq * i_q)) / C
        zd = R * i_d - X * i_q
        zq = X * i_d + R * i_q
        did = (-zd + v_g_d[n] - md * v) / L
        diq = (-zq + v_g_q[n] - mq * v) / L
        v_new = v + dt * dv
        if not v_new > v_dc_floor:
            raise SimulationDiverged(
                f"DC-link voltage {v_new:.6g} V at or below floor {v_dc_floor:.6g} V", step0 + n
            )
        w = w + dt * dw
        v = v_new
        i_d = i_d + dt * did
        i_q = i_q + dt * diq
    return PlantState(w, v, DqVector(i_d, i_q))


def steady_state_active_power(w_ref: float, v_dc_ref: float, tau_l: float, p: PlantParams) -> float:
    """Grid active power needed to hold the set-points against the load."""
    return p.D * w_ref**2 + p.G_dc * v_dc_ref**2 + w_ref * tau_l
