"""Simulation configuration: dataclasses, YAML loading and validation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .af import AfConfig
from .errors import InvalidArgument, InvalidConfiguration
from .inner import Limits
from .ofo import OfoConfig
from .plant import V_DC_REF, PlantParams, per_unit_params
from .scenarios import ScenarioSpec

OUTER_MODES = ("none", "af", "ofo")
TRIP_ACTIONS = ("record", "block_motor", "stop")


@dataclass(frozen=True)
class Tuning:
    omega_m: float = 2 * math.pi * 2
    omega_dc: float = 2 * math.pi * 20
    omega_g: float = 2 * math.pi * 300
    zeta_m: float = 1.0
    zeta_dc: float = 1.0
    zeta_g: float = 1.0


@dataclass(frozen=True)
class Timing:
    dt_plant: float = 25e-6
    T_c: float = 250e-6

    @property
    def substeps(self) -> int:
        return int(round(self.T_c / self.dt_plant))


@dataclass(frozen=True)
class Protection:
    """Trip and diagnostic thresholds."""

    trip_band: float = 0.15  # fraction of v_dc_ref
    trip_action: str = "block_motor"
    v_dc_floor: float = 0.10  # fraction of v_dc_ref; below this the run aborts
    grid_floor: float = 0.01  # fraction of v_g_nom
    overspeed: float = 1.05  # multiple of w_max


@dataclass(frozen=True)
class SimConfig:
    plant: PlantParams = field(default_factory=per_unit_params)
    limits: Limits = field(default_factory=Limits)
    tuning: Tuning = field(default_factory=Tuning)
    outer_mode: str = "none"
    af: AfConfig = field(default_factory=AfConfig)
    ofo: OfoConfig = field(default_factory=OfoConfig)
    timing: Timing = field(default_factory=Timing)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    protection: Protection = field(default_factory=Protection)
    v_dc_ref: float = V_DC_REF
    out_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        validate(self)

    @property
    def m(self) -> int:
        return self.ofo.m

    @property
    def n_ticks(self) -> int:
        """Number of control periods in the run (rows are n_ticks + 1)."""
        return int(round(self.scenario.duration / self.timing.T_c))

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def with_scenario(self, **changes) -> SimConfig:
        return dataclasses.replace(self, scenario=dataclasses.replace(self.scenario, **changes))


def _integer_ratio(a: float, b: float) -> bool:
    r = a / b
    return round(r) >= 1 and abs(r - round(r)) <= 1e-9 * r


def validate(cfg: SimConfig) -> None:
    t = cfg.timing
    if not t.dt_plant > 0 or not t.T_c > 0:
        raise InvalidConfiguration("sample times must be > 0", "timing")
    if not _integer_ratio(t.T_c, t.dt_plant):
        raise InvalidConfiguration(
            f"timing.T_c={t.T_c} must be an integer multiple of timing.dt_plant={t.dt_plant}",
            "timing.T_c/timing.dt_plant",
        )
    if abs(cfg.ofo.T_c - t.T_c) > 1e-15:
        raise InvalidConfiguration(
            f"ofo.T_c={cfg.ofo.T_c} must equal timing.T_c={t.T_c}", "ofo.T_c/timing.T_c"
        )
    if not _integer_ratio(cfg.scenario.duration, t.T_c):
        raise InvalidConfiguration("duration must be an integer multiple of timing.T_c", "scenario.duration")
    if cfg.outer_mode not in OUTER_MODES:
        raise InvalidConfiguration(f"expected one of {OUTER_MODES}, got {cfg.outer_mode!r}", "outer_mode")
    if cfg.protection.trip_action not in TRIP_ACTIONS:
        raise InvalidConfiguration(
            f"expected one of {TRIP_ACTIONS}, got {cfg.protection.trip_action!r}", "protection.trip_action"
        )
    if not cfg.v_dc_ref > 0:
        raise InvalidConfiguration(f"must be > 0, got {cfg.v_dc_ref}", "v_dc_ref")
    margin = cfg.plant.euler_margin(t.dt_plant)
    if not margin < 2:
        raise InvalidConfiguration(
            f"explicit Euler unstable for the grid current: dt*(R/L + omega0) = {margin:.4g} >= 2",
            "timing.dt_plant",
        )
    af = cfg.af.for_limits(cfg.limits.i_g_max)
    # worst case: reference twice the current limit, raw modulation of 1
    af_margin = af.euler_margin(t.T_c, af.thr1, max(0.0, 1.0 - af.thr2))
    if not af_margin < 2:
        raise InvalidConfiguration(f"activation-function Euler step not contractive ({af_margin:.4g} >= 2)", "af")


# ---------------------------------------------------------------------------
# YAML loading

_SECTIONS = {
    "plant": PlantParams,
    "limits": Limits,
    "tuning": Tuning,
    "af": AfConfig,
    "ofo": OfoConfig,
    "timing": Timing,
    "scenario": ScenarioSpec,
    "protection": Protection,
}
_SCALARS = {"outer_mode": str, "v_dc_ref": float, "out_dir": str, "seed": int}


def _build(cls, data, path: str, base=None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfiguration(f"expected a mapping, got {type(data).__name__}", path)
    names = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise InvalidConfiguration(f"unknown key; expected one of {sorted(names)}", f"{path}.{key}")
    kwargs = {}
    for key, value in data.items():
        if key in ("step_levels",):
            value = tuple(float(v) for v in value)
        elif key not in ("kind", "profiles", "trip_action", "assumption3_mode") and value is not None:
            try:
                value = float(value)
            except (TypeError, ValueError) as exc:
                raise InvalidConfiguration(f"expected a number, got {value!r}", f"{path}.{key}") from exc
        kwargs[key] = value
    try:
        if base is not None:
            return dataclasses.replace(base, **kwargs)
        return cls(**kwargs)
    except InvalidConfiguration as exc:
        if exc.key is None:
            raise InvalidConfiguration(str(exc), path) from exc
        raise
    except (InvalidArgument, TypeError) as exc:
        raise InvalidConfiguration(str(exc), path) from exc


def config_from_dict(data: dict) -> SimConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfiguration("top level must be a mapping", "<root>")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            base = per_unit_params() if key == "plant" else None
            kwargs[key] = _build(_SECTIONS[key], value, key, base)
        elif key in _SCALARS:
            try:
                kwargs[key] = _SCALARS[key](value)
            except (TypeError, ValueError) as exc:
                raise InvalidConfiguration(f"expected {_SCALARS[key].__name__}, got {value!r}", key) from exc
        else:
            raise InvalidConfiguration(f"unknown key; expected one of {sorted([*_SECTIONS, *_SCALARS])}", key)
    # T_c lives in timing; keep the OFO copy consistent unless given explicitly
    timing = kwargs.get("timing", Timing())
    ofo_data = data.get("ofo") or {}
    if "T_c" not in ofo_data:
        ofo_kw = {k: float(v) for k, v in ofo_data.items()}
        ofo_kw["T_c"] = timing.T_c
        kwargs["ofo"] = _build(OfoConfig, ofo_kw, "ofo")
    return SimConfig(**kwargs)


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidConfiguration(f"cannot read config: {exc}", str(path)) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidConfiguration(f"parse error: {exc}", str(path)) from exc
    return config_from_dict(data)


def _describe(cls) -> dict:
    out = {}
    defaults = cls() if cls is not PlantParams else per_unit_params()
    for f in dataclasses.fields(cls):
        out[f.name] = getattr(defaults, f.name)
    return out


def schema() -> dict:
    """Every configuration key with its default value."""
    doc = {name: _describe(cls) for name, cls in _SECTIONS.items()}
    doc["scenario"]["step_levels"] = list(doc["scenario"]["step_levels"])
    doc["outer_mode"] = "none"
    doc["v_dc_ref"] = V_DC_REF
    doc["out_dir"] = "out"
    doc["seed"] = 0
    return doc


def print_schema() -> str:
    header = (
        "# Simulation configuration (YAML). Every key is optional; shown values are defaults.\n"
        "# Units are SI: seconds, volts, amps, watts, vars, N*m, rad/s.\n"
        "# af.thr1: null means the current limit i_g_max.\n"
        "# outer_mode: none | af | ofo\n"
        "# scenario.kind: voltage_dip | reference_step | over_voltage | custom\n"
        "# scenario.profiles (custom only): {v_g: [[t, per-unit]], tau_l: [[t, N*m]], "
        "Q_ref: [[t, var]], w_ref: [[t, rad/s]]}\n"
        "# protection.trip_action: record | block_motor | stop\n"
    )
    return header + yaml.safe_dump(schema(), sort_keys=False)
