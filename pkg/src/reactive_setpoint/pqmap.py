"""Admissible reactive-power band as a function of active power."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dq import DqVector
from .errors import InvalidArgument
from .inner import Limits
from .ofo import DisturbanceSample, constraint_interval
from .plant import PlantParams


@dataclass(frozen=True)
class PqBand:
    """One row of the capability map.  An empty band has ``Q_lo = Q_hi = nan``."""

    P: float
    Q_lo: float
    Q_hi: float
    current_feasible: bool
    modulation_feasible: bool

    @property
    def empty(self) -> bool:
        return math.isnan(self.Q_lo)


def pq_capability_map(lim: Limits, p: PlantParams, v_dc_ref: float, v_g: DqVector, n_P: int = 201) -> list[PqBand]:
    """Sweep ``P`` over ``[-P_g_max, P_g_max]`` and return the feasible ``Q`` band at each point."""
    if n_P < 2:
        raise InvalidArgument(f"n_P must be >= 2, got {n_P}")
    rows = []
    for P in np.linspace(-lim.P_g_max, lim.P_g_max, n_P):
        I = constraint_interval(DisturbanceSample(float(P), v_g), lim, p, v_dc_ref)
        if I.nonempty:
            rows.append(PqBand(float(P), I.lo, I.hi, True, True))
        else:
            rows.append(PqBand(float(P), math.nan, math.nan, I.current_feasible, I.modulation_feasible))
    return rows


def band_arrays(rows: list[PqBand]) -> dict:
    return {
        "P": np.array([r.P for r in rows]),
        "Q_lo": np.array([r.Q_lo for r in rows]),
        "Q_hi": np.array([r.Q_hi for r in rows]),
    }
