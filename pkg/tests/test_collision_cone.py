"""Unit tests for the collision cone barrier."""

import numpy as np
import pytest

from shiftgov.collision_cone import (
    C3bfParams,
    Obstacle,
    c3bf_constraint_row,
    clearance,
    collision_cone_h,
    cone_half_angle,
    relaxed_h,
)
from shiftgov.cbf import discrete_cbf_residual
from shiftgov.vehicle import ControlInput, VehicleParams, VehicleState, linearize

from oracles import cone_membership_trig, fd_gradient


def test_obstacle_basics():
    obs = Obstacle(3.0, 4.0, 1.0, -2.0, 0.8)
    obs.validate()
    assert np.allclose(obs.position(), [3.0, 4.0])
    assert np.allclose(obs.velocity(), [1.0, -2.0])
    moved = obs.advanced(0.5)
    assert np.allclose(moved.position(), [3.5, 3.0])
    assert moved.radius == obs.radius
    with pytest.raises(ValueError):
        Obstacle(0, 0, 0, 0, 0.0).validate()


def test_params_validation():
    C3bfParams().validate()
    with pytest.raises(ValueError):
        C3bfParams(gamma=0.0).validate()
    with pytest.raises(ValueError):
        C3bfParams(eps_v=0.0).validate()
    with pytest.raises(ValueError):
        C3bfParams(inside_slope=-1.0).validate()


def test_cone_half_angle():
    assert cone_half_angle(10.0, 5.0) == pytest.approx(np.arcsin(0.5))
    # inside the disc the angle saturates at pi/2
    assert cone_half_angle(1.0, 2.0) == pytest.approx(np.pi / 2)


def test_exact_value_formula():
    params = C3bfParams()
    ego = VehicleState(0.0, 0.0, 0.0, 10.0)
    obs = Obstacle(20.0, 5.0, -2.0, 1.0, 2.0)
    ev = collision_cone_h(ego, obs, params)

    p = obs.position() - np.array([ego.x, ego.y])
    w = obs.velocity() - 10.0 * np.array([1.0, 0.0])
    want = float(p @ w) + np.linalg.norm(w) * np.sqrt(p @ p - obs.radius**2)
    assert ev.value == pytest.approx(want, abs=1e-12)


def test_sign_is_cone_membership():
    params = C3bfParams()
    # dead ahead, closing: inside the cone
    ego = VehicleState(0.0, 0.0, 0.0, 10.0)
    head_on = Obstacle(30.0, 0.0, 0.0, 0.0, 2.0)
    assert collision_cone_h(ego, head_on, params).value < 0.0
    # generous lateral offset: relative velocity clears the disc
    passing = Obstacle(30.0, 10.0, 0.0, 0.0, 2.0)
    assert collision_cone_h(ego, passing, params).value > 0.0
    # receding obstacle is always safe
    receding = Obstacle(30.0, 0.0, 15.0, 0.0, 2.0)
    assert collision_cone_h(ego, receding, params).value > 0.0

    rng = np.random.default_rng(31)
    for _ in range(200):
        ego = VehicleState(0.0, 0.0, rng.uniform(-np.pi, np.pi), rng.uniform(0.5, 20.0))
        obs = Obstacle(rng.uniform(-30, 30), rng.uniform(-30, 30),
                       rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(0.3, 3.0))
        p = obs.position() - np.array([ego.x, ego.y])
        if np.linalg.norm(p) <= obs.radius + 0.2:
            continue
        w = obs.velocity() - ego.v * np.array([np.cos(ego.psi), np.sin(ego.psi)])
        if np.linalg.norm(w) < 1e-6:
            continue
        h = collision_cone_h(ego, obs, params).value
        if abs(h) < 1e-9:
            continue
        inside = cone_membership_trig(p, w, obs.radius)
        assert (h < 0.0) == inside


def test_zero_relative_velocity_sits_on_boundary():
    params = C3bfParams()
    ego = VehicleState(0.0, 0.0, 0.0, 5.0)
    obs = Obstacle(20.0, 0.0, 5.0, 0.0, 1.5)  # same velocity vector
    assert collision_cone_h(ego, obs, params).value == pytest.approx(0.0, abs=1e-12)
    # the relaxed form stays strictly positive there
    assert relaxed_h(ego, obs, params).value > 0.0


def test_branch_continuity_at_disc_boundary():
    params = C3bfParams()
    r = 2.0
    for w_case in ([0.0, 0.0], [3.0, -1.0], [-2.0, 2.0]):
        vals = []
        for d in (r + 1e-9, r - 1e-9):
            ego = VehicleState(0.0, 0.0, 0.0, 4.0)
            obs = Obstacle(d, 0.0, w_case[0] + 4.0, w_case[1], r)
            vals.append(relaxed_h(ego, obs, params).value)
        # the outside branch approaches the seam with a sqrt modulus, so the
        # mismatch at eps away is O(sqrt(2 r eps) |w|)
        assert vals[0] == pytest.approx(vals[1], abs=3e-4)


def test_inside_disc_delegates_to_relaxed():
    params = C3bfParams()
    ego = VehicleState(0.0, 0.0, 0.0, 3.0)
    obs = Obstacle(1.0, 0.5, 0.0, 0.0, 2.0)
    exact = collision_cone_h(ego, obs, params)
    relax = relaxed_h(ego, obs, params)
    assert exact.value == relax.value
    assert np.array_equal(exact.grad_state, relax.grad_state)
    assert relax.value < 0.0  # penetrating states read negative


def test_relaxed_gradient_matches_fd_both_branches():
    params = C3bfParams()
    cases = [
        VehicleState(0.0, 0.0, 0.3, 9.0),    # well outside
        VehicleState(17.5, 2.2, 0.1, 6.0),   # just outside
        VehicleState(19.4, 3.0, -0.2, 4.0),  # inside the disc
    ]
    obs = Obstacle(19.0, 3.0, 1.0, -0.5, 1.5)
    for ego in cases:
        ev = relaxed_h(ego, obs, params)

        def value_of(arr):
            return relaxed_h(VehicleState.from_array(arr), obs, params).value

        ref = fd_gradient(value_of, ego.as_array(), h=1e-6)
        assert np.allclose(ev.grad_state, ref, atol=1e-5), (ego, ev.grad_state, ref)


def test_row_residual_identity_at_nominal():
    params = C3bfParams()
    vp = VehicleParams()
    ego = VehicleState(0.0, 0.0, 0.1, 8.0)
    u0 = ControlInput(0.5, -0.05)
    jac = linearize(ego, u0, 0.1, vp)
    obs_now = Obstacle(15.0, -4.0, 0.0, 3.0, 1.0)
    obs_next = obs_now.advanced(0.1)

    row = c3bf_constraint_row(ego, obs_now, obs_next, jac, u0, params)

    x_next = jac.A @ ego.as_array() + jac.B @ u0.as_array() + jac.c
    here = relaxed_h(ego, obs_now, params)
    nxt = relaxed_h(VehicleState.from_array(x_next), obs_next, params)
    want = discrete_cbf_residual(here.value, nxt.value, params.gamma)
    got = row.rhs - float(row.coeffs @ u0.as_array())
    assert got == pytest.approx(want, abs=1e-10)


def test_clearance():
    ego = VehicleState(0.0, 0.0, 0.0, 5.0)
    assert clearance(ego, Obstacle(3.0, 4.0, 0, 0, 1.0)) == pytest.approx(4.0)
    assert clearance(ego, Obstacle(0.5, 0.0, 0, 0, 1.0)) == pytest.approx(-0.5)
