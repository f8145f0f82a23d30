import numpy as np
import pytest

from reactive_setpoint import af as af_mod
from reactive_setpoint import ofo as ofo_mod
from reactive_setpoint.config import Protection, SimConfig
from reactive_setpoint.errors import SimulationDiverged
from reactive_setpoint.scenarios import ScenarioSpec
from reactive_setpoint.simulate import COLUMN_NAMES, identify, run_or_raise, run_scenario


def custom(duration=1.0, mode="none", **kw):
    return SimConfig(outer_mode=mode, scenario=ScenarioSpec(kind="custom", duration=duration, **kw))


COLLAPSE = SimConfig(
    protection=Protection(trip_action="record"),
    scenario=ScenarioSpec(
        kind="custom", duration=2.0, tau_l_frac=0.9, profiles={"v_g": [[0.0, 1.0], [0.1, 1.0], [0.1, 0.15]]}
    ),
)


def test_row_count_and_time_axis():
    cfg = SimConfig(scenario=ScenarioSpec(kind="reference_step", duration=10.0))
    res = run_scenario(cfg)
    assert len(res.trace) == 40001
    t = res.trace["t"]
    assert t[0] == 0.0 and t[-1] == 10.0
    np.testing.assert_array_equal(t, np.arange(40001) * 250e-6)
    assert set(res.trace.columns) == set(COLUMN_NAMES)


def test_nominal_closed_loop_tracks_reactive_power():
    Q_ref = 1.5e6
    res = run_scenario(custom(3.0, tau_l_frac=0.5, Q_ref=Q_ref))
    m = res.metrics
    assert m["time_current_above_limit"] == 0.0 and not m["trip"]
    tail = res.trace["Q_measured"][len(res.trace) // 2 :]
    assert np.sqrt(np.mean((tail - Q_ref) ** 2)) < 0.01 * Q_ref


def test_starts_in_equilibrium():
    res = run_scenario(custom(0.05, tau_l_frac=0.5, Q_ref=1e6))
    tr = res.trace
    assert np.max(np.abs(tr["w"] - tr["w_ref"])) < 1e-6 * tr["w_ref"][0]
    assert np.max(np.abs(tr["v_dc"] - 5000.0)) < 1e-3


class Counter:
    def __init__(self, fn):
        self.fn, self.calls = fn, 0

    def __call__(self, *a, **kw):
        self.calls += 1
        return self.fn(*a, **kw)


@pytest.mark.parametrize("mode, expect_af, expect_ofo", [("none", 0, 0), ("af", 401, 0), ("ofo", 0, 401)])
def test_mode_isolation(monkeypatch, mode, expect_af, expect_ofo):
    counters = {}
    for mod, name in [(af_mod, "af_step"), (af_mod, "q_min_modulation"), (ofo_mod, "ofo_step"), (ofo_mod, "ofo_init")]:
        c = Counter(getattr(mod, name))
        monkeypatch.setattr(mod, name, c)
        counters[name] = c
    run_scenario(custom(0.1, mode, Q_ref=1e6))
    assert counters["af_step"].calls == expect_af
    assert counters["ofo_step"].calls == expect_ofo
    if mode == "none":
        assert all(c.calls == 0 for c in counters.values())


def test_ofo_triggers_every_m_ticks():
    res = run_scenario(custom(0.1, "ofo", Q_ref=2e6))
    k = np.flatnonzero(res.trace["ofo_trigger"])
    assert k[0] == 1
    assert np.all(np.diff(k) == 4)
    assert len(res.triggers) == len(k)


def test_collapse_returns_partial_trace():
    res = run_scenario(COLLAPSE)
    assert isinstance(res.error, SimulationDiverged)
    assert 0 < len(res.trace) < COLLAPSE.n_ticks + 1
    assert "diverged" in res.metrics
    with pytest.raises(SimulationDiverged):
        run_or_raise(COLLAPSE)


def test_hard_stop_at_trip():
    cfg = SimConfig(scenario=ScenarioSpec(kind="voltage_dip", duration=3.0))
    res = run_scenario(cfg, hard_stop=True)
    assert res.metrics["trip"]
    assert res.trace["t"][-1] == pytest.approx(res.metrics["trip_time"])


def test_identify_response_decays():
    e = identify(SimConfig())
    assert e[0] > 0 and e[-1] < 1e-3 * e[0]
