"""Activation-function outer loop for the reactive-power set-point.

The set-point follows the external reference through a first-order lag and
is pushed towards safe values by two hinge activations: one on the current
reference magnitude (towards zero reactive power) and one on the
pre-saturation modulation magnitude (towards the modulation-minimizing
reactive power).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .dq import DqVector
from .errors import InvalidArgument, InvalidConfiguration
from .plant import PlantParams


@dataclass(frozen=True)
class AfConfig:
    omega_q: float = 2 * math.pi * 5
    kappa1: float = 0.1
    kappa2: float = 250.0
    thr1: float | None = None  # None: use the current limit i_g_max
    thr2: float = 0.97 / math.sqrt(2.0)
    sharpness: float = 0.0

    def __post_init__(self):
        if not self.omega_q > 0:
            raise InvalidConfiguration(f"must be > 0, got {self.omega_q}", "af.omega_q")
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise InvalidConfiguration("gains must be >= 0", "af.kappa1/kappa2")
        if (self.thr1 is not None and self.thr1 < 0) or self.thr2 < 0:
            raise InvalidConfiguration("thresholds must be >= 0", "af.thr1/thr2")
        if self.sharpness < 0:
            raise InvalidConfiguration(f"must be >= 0, got {self.sharpness}", "af.sharpness")
        if self.kappa2 > 0 and not self.kappa1 < self.kappa2:
            warnings.warn(
                "af.kappa1 should be much smaller than af.kappa2 so the modulation "
                "constraint takes priority",
                stacklevel=3,
            )

    def for_limits(self, i_g_max: float) -> AfConfig:
        """Copy with the current threshold defaulted to ``i_g_max``."""
        if self.thr1 is not None:
            return self
        return replace(self, thr1=i_g_max)

    def euler_margin(self, dt: float, gamma1_max: float, gamma2_max: float) -> float:
        """Worst-case ``dt * (omega_q + kappa1*G1 + kappa2*G2)``; must stay below 2."""
        return dt * (self.omega_q + self.kappa1 * gamma1_max + self.kappa2 * gamma2_max)


@dataclass(frozen=True)
class AfState:
    Q_star: float


def _hinge(x: float, thr: float, sharpness: float) -> float:
    if thr < 0:
        raise InvalidArgument(f"threshold must be >= 0, got {thr}")
    if sharpness == 0 or thr == 0:
        return max(0.0, x - thr)
    beta = sharpness / thr
    z = beta * (x - thr)
    # log(1 + e^z) without overflow
    if z > 0:
        return (z + math.log1p(math.exp(-z))) / beta
    return math.log1p(math.exp(z)) / beta


def gamma1(i_star_norm: float, thr1: float, sharpness: float = 0.0) -> float:
    """Current-limit activation."""
    return _hinge(i_star_norm, thr1, sharpness)


def gamma2(m_raw_norm: float, thr2: float, sharpness: float = 0.0) -> float:
    """Modulation-limit activation, fed the unsaturated modulation magnitude."""
    return _hinge(m_raw_norm, thr2, sharpness)


def q_min_modulation(v_g: DqVector, p: PlantParams) -> float:
    """Reactive power minimizing the steady-state modulation magnitude."""
    z2 = p.z_norm_sq
    if not z2 > 0:
        raise InvalidArgument("grid impedance must be nonzero")
    return p.X_g * v_g.norm_sq() / z2


def af_step(
    st: AfState,
    Q_ref: float,
    i_star_norm: float,
    m_raw_norm: float,
    Q_mm: float,
    dt: float,
    cfg: AfConfig,
) -> AfState:
    if not dt > 0:
        raise InvalidArgument(f"dt must be > 0, got {dt}")
    if cfg.thr1 is None:
        raise InvalidArgument("AfConfig.thr1 is unresolved; use AfConfig.for_limits")
    q = st.Q_star
    g1 = gamma1(i_star_norm, cfg.thr1, cfg.sharpness)
    g2 = gamma2(m_raw_norm, cfg.thr2, cfg.sharpness)
    dq = -cfg.omega_q * (q - Q_ref) - cfg.kappa1 * g1 * q - cfg.kappa2 * g2 * (q - Q_mm)
    return AfState(q + dt * dq)
