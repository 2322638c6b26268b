"""Unit tests for the receding-horizon controller."""

import numpy as np
import pytest

from shiftgov.cbf import AccCbfParams
from shiftgov.collision_cone import C3bfParams, Obstacle
from shiftgov.mpc import (
    Controller,
    ControllerMemory,
    MpcConfig,
    MpcSolution,
    _shift_stage_blocks,
)
from shiftgov.qp import QpStatus
from shiftgov.road import (
    SpeedProfile,
    build_centerline,
    rollout_schedule,
    AccelSchedule,
)
from shiftgov.vehicle import VehicleParams, VehicleState, step


def straight():
    return build_centerline([[0.0, 0.0], [200.0, 0.0], [400.0, 0.0]])


def make_controller(cl, horizon=12):
    return Controller(VehicleParams(), cl, AccCbfParams(), C3bfParams(),
                      MpcConfig(horizon=horizon))


def cruise_traj(cl, v=10.0, n=200):
    sch = AccelSchedule.from_pairs([])
    traj, _, _ = rollout_schedule(cl, 0.0, v, sch, 0.0, 0.1, n)
    return traj


def test_config_validation():
    MpcConfig().validate()
    with pytest.raises(ValueError):
        MpcConfig(horizon=0).validate()
    with pytest.raises(ValueError):
        MpcConfig(dt=0.0).validate()
    with pytest.raises(ValueError):
        MpcConfig(q=np.ones((4, 4)) - np.eye(4)).validate()  # indefinite
    with pytest.raises(ValueError):
        MpcConfig(r=np.zeros((2, 2))).validate()
    with pytest.raises(ValueError):
        MpcConfig(slack_weight=10.0).validate()
    with pytest.raises(ValueError):
        MpcConfig(a_rate=0.0).validate()


def test_shift_stage_blocks():
    arr = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 99.0])
    out = _shift_stage_blocks(arr, n_stages=3, width=2)
    assert np.array_equal(out, [3.0, 4.0, 5.0, 6.0, 5.0, 6.0, 99.0])
    assert np.array_equal(arr, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 99.0])


def test_max_slack_property():
    sol = MpcSolution(
        inputs=np.zeros((2, 2)), states=np.zeros((3, 4)),
        acc_slack=np.array([0.0, 0.3]), obs_slack=np.array([[0.1, 0.7]]),
        stage_costs=np.zeros(2), status=QpStatus.OPTIMAL, degraded=False,
        iterations=10, kkt_residual=0.0, solve_time=0.0)
    assert sol.max_slack == pytest.approx(0.7)
    empty = MpcSolution(
        inputs=np.zeros((2, 2)), states=np.zeros((3, 4)),
        acc_slack=np.zeros(0), obs_slack=np.zeros((0, 2)),
        stage_costs=np.zeros(2), status=QpStatus.OPTIMAL, degraded=False,
        iterations=10, kkt_residual=0.0, solve_time=0.0)
    assert empty.max_slack == 0.0


def test_tracks_reference_from_on_profile():
    cl = straight()
    ctrl = make_controller(cl)
    traj = cruise_traj(cl)
    mem = ControllerMemory()
    x = VehicleState(0.0, 0.0, 0.0, 10.0)
    u, sol = ctrl.step(x, 0.0, traj, 0.0, None, [], mem)
    assert sol.status == QpStatus.OPTIMAL
    assert not sol.degraded
    assert sol.acc_slack.size == 0 and sol.obs_slack.size == 0
    assert abs(u.a) < 0.3
    assert abs(u.delta) < 0.02


def test_accelerates_when_behind_speed():
    cl = straight()
    ctrl = make_controller(cl)
    traj = cruise_traj(cl)
    u, sol = ctrl.step(VehicleState(0.0, 0.0, 0.0, 6.0), 0.0, traj, 0.0,
                       None, [], ControllerMemory())
    assert sol.status == QpStatus.OPTIMAL
    assert u.a > 0.5


def test_brakes_when_ahead_of_speed():
    cl = straight()
    ctrl = make_controller(cl)
    traj = cruise_traj(cl)
    u, _ = ctrl.step(VehicleState(0.0, 0.0, 0.0, 14.0), 0.0, traj, 0.0,
                     None, [], ControllerMemory())
    assert u.a < -0.5


def test_brakes_for_close_lead():
    """A lead inside the headway overrides the cruise reference."""
    cl = straight()
    ctrl = make_controller(cl)
    traj = cruise_traj(cl)
    lead = VehicleState(16.0, 0.0, 0.0, 4.0)
    u, sol = ctrl.step(VehicleState(0.0, 0.0, 0.0, 10.0), 0.0, traj, 0.0,
                       lead, [], ControllerMemory())
    assert u.a < -1.0
    assert sol.acc_slack.size == ctrl.cfg.horizon


def test_inputs_respect_boxes_and_rates():
    cl = straight()
    ctrl = make_controller(cl)
    traj = cruise_traj(cl)
    vp = ctrl.vehicle
    cfg = ctrl.cfg
    mem = ControllerMemory()
    x = VehicleState(0.0, 0.0, 0.0, 22.0)  # strong initial overspeed
    prev = None
    for k in range(8):
        u, sol = ctrl.step(x, 0.1 * k, traj, 0.0, None, [], mem)
        assert vp.a_min - 1e-9 <= u.a <= vp.a_max + 1e-9
        assert abs(u.delta) <= vp.delta_max + 1e-9
        assert np.all(sol.inputs[:, 0] >= vp.a_min - 1e-9)
        assert np.all(sol.inputs[:, 0] <= vp.a_max + 1e-9)
        if prev is not None:
            assert abs(u.a - prev.a) <= cfg.a_rate * cfg.dt + 1e-6
            assert abs(u.delta - prev.delta) <= cfg.delta_rate * cfg.dt + 1e-6
        prev = u
        x = step(x, u, cfg.dt, vp)


def test_slack_fires_only_when_row_is_impossible():
    """Gap far inside standstill: no input satisfies the decay, slack reports it."""
    cl = straight()
    ctrl = make_controller(cl)
    traj = cruise_traj(cl)
    lead = VehicleState(2.0, 0.0, 0.0, 0.0)  # parked almost on the ego
    u, sol = ctrl.step(VehicleState(0.0, 0.0, 0.0, 12.0), 0.0, traj, 0.0,
                       lead, [], ControllerMemory())
    assert sol.status == QpStatus.OPTIMAL  # soft rows keep the QP feasible
    assert sol.max_slack > 0.1
    # brakes as hard as the rate row allows from a zero anchor
    assert u.a == pytest.approx(-ctrl.cfg.a_rate * ctrl.cfg.dt, abs=1e-6)
    assert np.all(sol.inputs[:, 0] >= ctrl.vehicle.a_min - 1e-9)


def test_warm_start_keeps_solving():
    cl = straight()
    ctrl = make_controller(cl)
    traj = cruise_traj(cl)
    mem = ControllerMemory()
    x = VehicleState(0.0, 0.0, 0.0, 9.0)
    lead = VehicleState(40.0, 0.0, 0.0, 9.0)
    obs = [Obstacle(60.0, -6.0, 0.0, 0.0, 1.0)]
    for k in range(6):
        u, sol = ctrl.step(x, 0.1 * k, traj, 0.0, lead, obs, mem)
        assert sol.status == QpStatus.OPTIMAL
        x = step(x, u, 0.1, ctrl.vehicle)
    assert mem.inputs.shape == (ctrl.cfg.horizon, 2)
    assert np.array_equal(mem.u_applied, mem.inputs[0])
    assert mem.layout == (ctrl.cfg.horizon, True, 1)
    assert mem.ego_s_hint is not None and mem.lead_s_hint is not None


def test_predicted_states_start_at_x0():
    cl = straight()
    ctrl = make_controller(cl, horizon=6)
    traj = cruise_traj(cl)
    x = VehicleState(3.0, 0.5, 0.05, 11.0)
    _, sol = ctrl.step(x, 0.0, traj, 0.0, None, [], ControllerMemory())
    assert np.allclose(sol.states[0], x.as_array(), atol=1e-12)
    assert sol.states.shape == (7, 4)
    assert sol.stage_costs.shape == (6,)
    assert np.all(sol.stage_costs >= 0.0)
