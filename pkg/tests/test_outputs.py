"""Unit tests for run artifacts: CSV log, metrics file, SVG plots."""

import numpy as np
import pytest

from shiftgov.outputs import emit_outputs
from shiftgov.scenario import SCHEMA_VERSION, Scenario
from shiftgov.simulation import run


@pytest.fixture(scope="module")
def mini_run():
    sc = Scenario.from_dict({
        "schema_version": SCHEMA_VERSION,
        "name": "outputs-unit",
        "duration": 1.0,
        "governor_enabled": False,
        "road": {"waypoints": [[0.0, 0.0], [150.0, 0.0], [300.0, 0.0]],
                 "speed": {"constant": 8.0}},
        "ego": {"s0": 0.0, "v0": 8.0},
        "lead": {"s0": 40.0, "v0": 8.0},
        "obstacles": [{"x": 60.0, "y": -8.0, "radius": 1.0},
                      {"x": 90.0, "y": 6.0, "radius": 2.0,
                       "velocity": [[0.0, -1.0, 0.0]]}],
    })
    return run(sc)


@pytest.fixture(scope="module")
def lead_free_run():
    sc = Scenario.from_dict({
        "schema_version": SCHEMA_VERSION,
        "name": "outputs-bare",
        "duration": 0.5,
        "governor_enabled": False,
        "road": {"waypoints": [[0.0, 0.0], [150.0, 0.0]],
                 "speed": {"constant": 8.0}},
        "ego": {"s0": 0.0, "v0": 8.0},
    })
    return run(sc)


def test_manifest_and_files(mini_run, tmp_path):
    log, metrics = mini_run
    manifest = emit_outputs(log, metrics, tmp_path / "out")
    assert sorted(manifest) == ["barriers.svg", "log.csv", "metrics.json",
                                "shift.svg", "speed.svg", "trajectory.svg"]
    for path in manifest.values():
        assert (tmp_path / "out" / path.split("/")[-1]).is_file()
        assert (tmp_path / "out" / path.split("/")[-1]).stat().st_size > 0


def test_csv_header_contract(mini_run, tmp_path):
    log, metrics = mini_run
    manifest = emit_outputs(log, metrics, tmp_path)
    lines = open(manifest["log.csv"]).read().splitlines()
    assert lines[0] == ("t,x,y,psi,v,a,delta,lead_x,lead_y,lead_v,t_sh,h_acc,"
                        "h_obs_0,h_obs_1,slack_acc,slack_obs_0,slack_obs_1")
    assert len(lines) == len(log.t) + 1


def test_csv_floats_round_trip_exactly(mini_run, tmp_path):
    """repr output parses back to the identical binary float."""
    log, metrics = mini_run
    manifest = emit_outputs(log, metrics, tmp_path)
    lines = open(manifest["log.csv"]).read().splitlines()
    for k in (0, 3, len(log.t) - 1):
        cells = [float(c) for c in lines[1 + k].split(",")]
        assert cells[0] == log.t[k]
        assert cells[1:5] == list(log.ego[k])
        assert cells[5:7] == list(log.inputs[k])
        assert cells[10] == log.t_sh[k]
        assert cells[11] == log.h_acc[k]
        assert cells[12] == log.h_obs[k, 0]
        assert cells[13] == log.h_obs[k, 1]


def test_csv_absent_lead_written_as_nan(lead_free_run, tmp_path):
    log, metrics = lead_free_run
    manifest = emit_outputs(log, metrics, tmp_path)
    text = open(manifest["log.csv"]).read()
    data = np.genfromtxt(manifest["log.csv"], delimiter=",", names=True)
    assert "nan" in text
    assert np.isnan(data["lead_x"]).all()
    assert np.isnan(data["h_acc"]).all()
    assert lines_have_no_obs_columns(text)


def lines_have_no_obs_columns(text):
    return "h_obs_0" not in text.splitlines()[0]


def test_metrics_json_written(mini_run, tmp_path):
    import json
    log, metrics = mini_run
    manifest = emit_outputs(log, metrics, tmp_path)
    loaded = json.load(open(manifest["metrics.json"]))
    assert loaded == metrics.to_dict()


def test_svg_outputs_are_byte_deterministic(mini_run, tmp_path):
    log, metrics = mini_run
    m1 = emit_outputs(log, metrics, tmp_path / "a")
    m2 = emit_outputs(log, metrics, tmp_path / "b")
    for name in ("trajectory.svg", "barriers.svg", "shift.svg", "speed.svg"):
        b1 = open(m1[name], "rb").read()
        b2 = open(m2[name], "rb").read()
        assert b1 == b2, f"{name} differs between identical emissions"


def test_unwritable_directory_raises_oserror(mini_run, tmp_path):
    log, metrics = mini_run
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory\n")
    with pytest.raises(OSError):
        emit_outputs(log, metrics, blocker / "out")
