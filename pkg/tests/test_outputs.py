import pytest
import yaml

from reactive_setpoint.config import SimConfig
from reactive_setpoint.outputs import PANELS, OutputError, header, read_trace_csv, trace_csv, write_outputs
from reactive_setpoint.scenarios import ScenarioSpec
from reactive_setpoint.simulate import COLUMNS, ScenarioTrace, compute_metrics, run_scenario

CFG = SimConfig(outer_mode="af", scenario=ScenarioSpec(kind="reference_step", duration=0.2))


def test_empty_trace_is_header_only():
    text = trace_csv(ScenarioTrace.empty(0))
    assert text == ",".join(header()) + "\n"
    assert compute_metrics(ScenarioTrace.empty(0), CFG, None) == {"rows": 0}


def test_header_has_units():
    assert header()[0] == "t [s]"
    assert len(header()) == len(COLUMNS)


def test_files_byte_identical_on_rerun(tmp_path):
    a = write_outputs(run_scenario(CFG).trace, {}, CFG, tmp_path / "a")
    b = write_outputs(run_scenario(CFG).trace, {}, CFG, tmp_path / "b")
    assert a["trace"].read_bytes() == b["trace"].read_bytes()
    assert a["trace"].name == "reference_step_af.csv"


def test_csv_round_trip(tmp_path):
    res = run_scenario(CFG)
    paths = write_outputs(res.trace, res.metrics, CFG, tmp_path)
    cols = read_trace_csv(paths["trace"])
    for name, _ in COLUMNS:
        assert (cols[name] == res.trace[name].astype(float)).all()
    doc = yaml.safe_load(paths["metrics"].read_text())
    assert doc["metrics"]["rows"] == len(res.trace)


def test_metrics_yaml_handles_nan(tmp_path):
    res = run_scenario(CFG)
    paths = write_outputs(res.trace, {"x": float("nan")}, CFG, tmp_path, convergence={"y": float("inf")})
    doc = yaml.safe_load(paths["metrics"].read_text())
    assert doc["metrics"]["x"] == "nan" and doc["convergence"]["y"] == "inf"


def test_plot_contains_every_panel_series(tmp_path):
    res = run_scenario(CFG)
    paths = write_outputs(res.trace, res.metrics, CFG, tmp_path, plot=True)
    svg = paths["plot"].read_text()
    for _, names in PANELS:
        for name in names:
            assert f'id="{name}"' in svg


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError) as exc:
        write_outputs(ScenarioTrace.empty(0), {}, CFG, blocker / "sub")
    assert str(blocker) in str(exc.value)
