"""Kinematic bicycle model of a road vehicle.

State is (x, y, psi, v): planar position of the center of gravity, heading,
and longitudinal speed. Inputs are longitudinal acceleration and front steering
angle. The slip angle beta = atan(l_r * tan(delta) / (l_f + l_r)) folds the
steering geometry into the velocity direction, so the model stays valid at the
low lateral accelerations typical of cruise control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    w = (theta + np.pi) % TWO_PI - np.pi
    if w == -np.pi:
        w = np.pi
    return float(w)


def clamp(value: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, value))


@dataclass
class VehicleState:
    x: float    # east position (m)
    y: float    # north position (m)
    psi: float  # heading (rad), kept in (-pi, pi]
    v: float    # longitudinal speed (m/s)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi, self.v], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "VehicleState":
        x, y, psi, v = (float(a) for a in arr)
        return cls(x, y, psi, v)


@dataclass
class ControlInput:
    a: float      # longitudinal acceleration (m/s^2)
    delta: float  # front steering angle (rad)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.delta], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ControlInput":
        a, delta = (float(u) for u in arr)
        return cls(a, delta)


@dataclass
class VehicleParams:
    l_f: float = 1.2        # CG to front axle (m)
    l_r: float = 1.6        # CG to rear axle (m)
    a_min: float = -6.0     # braking limit (m/s^2)
    a_max: float = 2.5      # acceleration limit (m/s^2)
    delta_max: float = 0.6  # steering limit (rad)
    v_max: float = 30.0     # speed limit of the model (m/s)

    def validate(self) -> None:
        if self.l_f <= 0.0 or self.l_r <= 0.0:
            raise ValueError("axle distances l_f, l_r must be positive")
        if self.a_min >= 0.0 or self.a_max <= 0.0:
            raise ValueError("need a_min < 0 < a_max")
        if not 0.0 < self.delta_max < np.pi / 2:
            raise ValueError("delta_max must lie in (0, pi/2)")
        if self.v_max <= 0.0:
            raise ValueError("v_max must be positive")

    def clamp_input(self, u: ControlInput) -> ControlInput:
        return ControlInput(
            clamp(u.a, self.a_min, self.a_max),
            clamp(u.delta, -self.delta_max, self.delta_max),
        )


@dataclass
class StateJacobians:
    """Affine one-step model x+ = A x + B u + c, exact at the expansion point."""

    A: np.ndarray  # 4x4
    B: np.ndarray  # 4x2
    c: np.ndarray  # 4


def slip_angle(delta: float, params: VehicleParams) -> float:
    return float(np.arctan(params.l_r * np.tan(delta) / (params.l_f + params.l_r)))


def _f(x: np.ndarray, a: float, delta: float, params: VehicleParams) -> np.ndarray:
    beta = slip_angle(delta, params)
    heading = x[2] + beta
    return np.array([
        x[3] * np.cos(heading),
        x[3] * np.sin(heading),
        x[3] * np.sin(beta) / params.l_r,
        a,
    ])


def _f_jacobians(x, a, delta, params):
    """Jacobians of the continuous dynamics wrt state and input."""
    k = params.l_r / (params.l_f + params.l_r)
    tan_d = np.tan(delta)
    beta = np.arctan(k * tan_d)
    # d(beta)/d(delta) through the atan composition
    dbeta = k * (1.0 + tan_d * tan_d) / (1.0 + (k * tan_d) ** 2)

    heading = x[2] + beta
    ch, sh = np.cos(heading), np.sin(heading)
    v = x[3]

    jx = np.zeros((4, 4))
    jx[0, 2] = -v * sh
    jx[0, 3] = ch
    jx[1, 2] = v * ch
    jx[1, 3] = sh
    jx[2, 3] = np.sin(beta) / params.l_r

    ju = np.zeros((4, 2))
    ju[0, 1] = -v * sh * dbeta
    ju[1, 1] = v * ch * dbeta
    ju[2, 1] = v * np.cos(beta) / params.l_r * dbeta
    ju[3, 0] = 1.0

    return jx, ju


def derivative(state: VehicleState, u: ControlInput, params: VehicleParams) -> np.ndarray:
    """Continuous-time state derivative (xdot, ydot, psidot, vdot)."""
    return _f(state.as_array(), u.a, u.delta, params)


def _rk4_raw(x: np.ndarray, a: float, delta: float, dt: float, params: VehicleParams) -> np.ndarray:
    k1 = _f(x, a, delta, params)
    k2 = _f(x + 0.5 * dt * k1, a, delta, params)
    k3 = _f(x + 0.5 * dt * k2, a, delta, params)
    k4 = _f(x + dt * k3, a, delta, params)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _postprocess(x: np.ndarray, params: VehicleParams) -> np.ndarray:
    out = x.copy()
    out[2] = wrap_angle(out[2])
    out[3] = clamp(out[3], 0.0, params.v_max)
    return out


def step(state: VehicleState, u: ControlInput, dt: float, params: VehicleParams) -> VehicleState:
    """One RK4 step of dt seconds; clamps v to [0, v_max] and wraps psi after."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    uc = params.clamp_input(u)
    x_next = _rk4_raw(state.as_array(), uc.a, uc.delta, dt, params)
    return VehicleState.from_array(_postprocess(x_next, params))


def linearize(state: VehicleState, u: ControlInput, dt: float, params: VehicleParams) -> StateJacobians:
    """Discrete affine model around (state, u).

    A and B are the exact Jacobians of the RK4 map, propagated stage by stage
    with the chain rule, so they match central differences of `step` at any
    interior point (away from the v clamp and the psi wrap). The offset c makes
    the model reproduce step(state, u) exactly at the expansion point.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    uc = params.clamp_input(u)
    a, delta = uc.a, uc.delta
    x0 = state.as_array()
    eye = np.eye(4)

    k1 = _f(x0, a, delta, params)
    j1x, j1u = _f_jacobians(x0, a, delta, params)
    d1x, d1u = j1x, j1u

    x2 = x0 + 0.5 * dt * k1
    k2 = _f(x2, a, delta, params)
    j2x, j2u = _f_jacobians(x2, a, delta, params)
    d2x = j2x @ (eye + 0.5 * dt * d1x)
    d2u = j2x @ (0.5 * dt * d1u) + j2u

    x3 = x0 + 0.5 * dt * k2
    k3 = _f(x3, a, delta, params)
    j3x, j3u = _f_jacobians(x3, a, delta, params)
    d3x = j3x @ (eye + 0.5 * dt * d2x)
    d3u = j3x @ (0.5 * dt * d2u) + j3u

    x4 = x0 + dt * k3
    k4 = _f(x4, a, delta, params)
    j4x, j4u = _f_jacobians(x4, a, delta, params)
    d4x = j4x @ (eye + dt * d3x)
    d4u = j4x @ (dt * d3u) + j4u

    a_mat = eye + (dt / 6.0) * (d1x + 2.0 * d2x + 2.0 * d3x + d4x)
    b_mat = (dt / 6.0) * (d1u + 2.0 * d2u + 2.0 * d3u + d4u)

    x_next = _postprocess(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), params)
    c_vec = x_next - a_mat @ x0 - b_mat @ uc.as_array()
    return StateJacobians(a_mat, b_mat, c_vec)


def _f_many(xs: np.ndarray, us: np.ndarray, params: VehicleParams) -> np.ndarray:
    beta = np.arctan(params.l_r * np.tan(us[:, 1]) / (params.l_f + params.l_r))
    heading = xs[:, 2] + beta
    out = np.empty_like(xs)
    out[:, 0] = xs[:, 3] * np.cos(heading)
    out[:, 1] = xs[:, 3] * np.sin(heading)
    out[:, 2] = xs[:, 3] * np.sin(beta) / params.l_r
    out[:, 3] = us[:, 0]
    return out


def _f_jacobians_many(xs: np.ndarray, us: np.ndarray, params: VehicleParams):
    n = xs.shape[0]
    k = params.l_r / (params.l_f + params.l_r)
    tan_d = np.tan(us[:, 1])
    beta = np.arctan(k * tan_d)
    dbeta = k * (1.0 + tan_d * tan_d) / (1.0 + (k * tan_d) ** 2)
    heading = xs[:, 2] + beta
    ch, sh = np.cos(heading), np.sin(heading)
    v = xs[:, 3]

    jx = np.zeros((n, 4, 4))
    jx[:, 0, 2] = -v * sh
    jx[:, 0, 3] = ch
    jx[:, 1, 2] = v * ch
    jx[:, 1, 3] = sh
    jx[:, 2, 3] = np.sin(beta) / params.l_r

    ju = np.zeros((n, 4, 2))
    ju[:, 0, 1] = -v * sh * dbeta
    ju[:, 1, 1] = v * ch * dbeta
    ju[:, 2, 1] = v * np.cos(beta) / params.l_r * dbeta
    ju[:, 3, 0] = 1.0
    return jx, ju


def rollout_with_jacobians(
    x0: VehicleState, u_seq: np.ndarray, dt: float, params: VehicleParams
):
    """Roll u_seq from x0 and linearize every stage in one vectorized pass.

    Returns (xs (N+1, 4) post-processed states, A (N, 4, 4), B (N, 4, 2),
    c (N, 4)). Row k of (A, B, c) equals linearize() at (xs[k], u_seq[k]); the
    batch exists because the per-stage calls dominate the controller's build
    time otherwise.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    u_seq = np.asarray(u_seq, dtype=float).reshape(-1, 2)
    n = u_seq.shape[0]
    uc = np.column_stack([
        np.clip(u_seq[:, 0], params.a_min, params.a_max),
        np.clip(u_seq[:, 1], -params.delta_max, params.delta_max),
    ])

    xs = np.empty((n + 1, 4))
    xs[0] = x0.as_array()
    state = x0
    for k in range(n):
        state = step(state, ControlInput(uc[k, 0], uc[k, 1]), dt, params)
        xs[k + 1] = state.as_array()

    x_base = xs[:-1]
    k1 = _f_many(x_base, uc, params)
    j1x, j1u = _f_jacobians_many(x_base, uc, params)
    d1x, d1u = j1x, j1u

    eye = np.broadcast_to(np.eye(4), (n, 4, 4))
    x2 = x_base + 0.5 * dt * k1
    k2 = _f_many(x2, uc, params)
    j2x, j2u = _f_jacobians_many(x2, uc, params)
    d2x = j2x @ (eye + 0.5 * dt * d1x)
    d2u = j2x @ (0.5 * dt * d1u) + j2u

    x3 = x_base + 0.5 * dt * k2
    k3 = _f_many(x3, uc, params)
    j3x, j3u = _f_jacobians_many(x3, uc, params)
    d3x = j3x @ (eye + 0.5 * dt * d2x)
    d3u = j3x @ (0.5 * dt * d2u) + j3u

    x4 = x_base + dt * k3
    k4 = _f_many(x4, uc, params)
    j4x, j4u = _f_jacobians_many(x4, uc, params)
    d4x = j4x @ (eye + dt * d3x)
    d4u = j4x @ (dt * d3u) + j4u

    a_mats = np.asarray(eye + (dt / 6.0) * (d1x + 2.0 * d2x + 2.0 * d3x + d4x))
    b_mats = (dt / 6.0) * (d1u + 2.0 * d2u + 2.0 * d3u + d4u)
    c_vecs = (xs[1:]
              - np.einsum("kij,kj->ki", a_mats, x_base)
              - np.einsum("kij,kj->ki", b_mats, uc))
    return xs, a_mats, b_mats, c_vecs
