"""Time profiles for the grid voltage, load torque and external set-points."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidConfiguration
from .inner import Limits

KINDS = ("voltage_dip", "reference_step", "over_voltage", "custom")


@dataclass(frozen=True)
class Profile:
    """Piecewise-linear (or, with ``hold``, piecewise-constant) function of time.

    Values are held constant before the first and after the last breakpoint.
    A step is written as two breakpoints at the same time.
    """

    times: tuple
    values: tuple
    hold: bool = False

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise InvalidConfiguration("profile needs matching, non-empty times and values")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise InvalidConfiguration("profile times must be non-decreasing")

    @classmethod
    def constant(cls, value: float) -> Profile:
        return cls((0.0,), (float(value),))

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]], hold: bool = False) -> Profile:
        pts = [tuple(map(float, p)) for p in points]
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts), hold)

    def __call__(self, t):
        tp = np.asarray(self.times)
        vp = np.asarray(self.values)
        scalar = np.ndim(t) == 0
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        if self.hold or len(tp) == 1:
            idx = np.searchsorted(tp, ta, side="right") - 1
            out = vp[np.clip(idx, 0, len(vp) - 1)]
        else:
            # right-continuous at repeated breakpoints
            idx = np.searchsorted(tp, ta, side="right")
            idx = np.clip(idx, 1, len(tp) - 1)
            t0, t1 = tp[idx - 1], tp[idx]
            v0, v1 = vp[idx - 1], vp[idx]
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.where(t1 > t0, (ta - t0) / np.where(t1 > t0, t1 - t0, 1.0), 1.0)
            frac = np.clip(frac, 0.0, 1.0)
            out = v0 + frac * (v1 - v0)
            out = np.where(ta < tp[0], vp[0], out)
            out = np.where(ta >= tp[-1], vp[-1], out)
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "reference_step"
    duration: float = 10.0
    assumption3_mode: bool = False
    # shared operating point; None means the scenario default
    w_ref: float | None = None
    tau_l_frac: float | None = None
    Q_ref: float | None = None
    # voltage_dip
    dip_depth: float = 0.4
    dip_start: float = 1.0
    ramp: float = 0.1
    hold: float = 1.0
    # reference_step
    step_levels: tuple = (3.0e6, -3.0e6)
    step_start: float = 2.0
    dwell: float = 5.0
    # over_voltage
    ov_factor: float = 1.12
    ov_start: float = 2.0
    ov_duration: float = 5.0
    ov_ramp: float = 0.01
    # custom: breakpoint lists [[t, value], ...]; v_g is a multiple of v_g_nom
    profiles: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfiguration(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}", "scenario.kind")
        if not self.duration > 0:
            raise InvalidConfiguration(f"must be > 0, got {self.duration}", "scenario.duration")
        if not 0 <= self.dip_depth < 1:
            raise InvalidConfiguration(f"must lie in [0, 1), got {self.dip_depth}", "scenario.dip_depth")
        for key in ("ramp", "hold", "dwell", "ov_duration", "ov_ramp"):
            if getattr(self, key) < 0:
                raise InvalidConfiguration("must be >= 0", f"scenario.{key}")


@dataclass(frozen=True)
class Scenario:
    """Time functions driving one run.  ``v_g`` gives the d-axis grid voltage."""

    v_g: Profile
    tau_l: Profile
    Q_ref: Profile
    w_ref: Profile


def _pick(value, default):
    return default if value is None else value


def build_scenario(spec: ScenarioSpec, lim: Limits) -> Scenario:
    v0 = lim.v_g_nom
    if spec.kind == "voltage_dip":
        t0, r, h = spec.dip_start, spec.ramp, spec.hold
        low = (1.0 - spec.dip_depth) * v0
        v_g = Profile((0.0, t0, t0 + r, t0 + r + h, t0 + 2 * r + h), (v0, v0, low, low, v0))
        tau = _pick(spec.tau_l_frac, 0.9) * lim.tau_max
        q = Profile.constant(_pick(spec.Q_ref, 3.0e6))
    elif spec.kind == "reference_step":
        v_g = Profile.constant(v0)
        tau = _pick(spec.tau_l_frac, 0.9) * lim.tau_max
        hi, lo = spec.step_levels
        t0, t1 = spec.step_start, spec.step_start + spec.dwell
        q = Profile((0.0, t0, t1), (hi, lo, hi), hold=True)
    elif spec.kind == "over_voltage":
        t0, r, d = spec.ov_start, spec.ov_ramp, spec.ov_duration
        high = spec.ov_factor * v0
        v_g = Profile((0.0, t0, t0 + r, t0 + d, t0 + d + r), (v0, v0, high, high, v0))
        tau = _pick(spec.tau_l_frac, -0.8) * lim.tau_max
        q = Profile.constant(_pick(spec.Q_ref, 0.0))
    elif spec.kind == "custom":
        prof = spec.profiles
        v_g = _custom(prof, "v_g", 1.0, False)
        v_g = Profile(v_g.times, tuple(v * v0 for v in v_g.values), v_g.hold)
        tau_prof = _custom(prof, "tau_l", _pick(spec.tau_l_frac, 0.0) * lim.tau_max, False)
        q = _custom(prof, "Q_ref", _pick(spec.Q_ref, 0.0), True)
        w = _custom(prof, "w_ref", _pick(spec.w_ref, lim.w_max), False)
        return Scenario(v_g=v_g, tau_l=tau_prof, Q_ref=q, w_ref=w)
    else:  # pragma: no cover - guarded by ScenarioSpec
        raise InvalidConfiguration(f"unknown scenario kind {spec.kind!r}", "scenario.kind")
    w = Profile.constant(_pick(spec.w_ref, lim.w_max))
    return Scenario(v_g=v_g, tau_l=Profile.constant(tau), Q_ref=q, w_ref=w)


def _custom(prof: dict, key: str, default: float, hold: bool) -> Profile:
    if key not in prof:
        return Profile.constant(default)
    entry = prof[key]
    if isinstance(entry, (int, float)):
        return Profile.constant(float(entry))
    try:
        return Profile.from_points(entry, hold=hold)
    except (TypeError, ValueError, IndexError) as exc:
        raise InvalidConfiguration(f"expected [[t, value], ...]: {exc}", f"scenario.profiles.{key}") from exc


def held_time(step: np.ndarray, hold_steps: int, dt: float) -> np.ndarray:
    """Times at which a disturbance is sampled when it is held over ``hold_steps`` steps."""
    return (step // hold_steps) * hold_steps * dt

