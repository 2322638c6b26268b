"""Collision cone barriers for disc obstacles.

For relative position p = p_obs - p_ego and relative velocity
w = v_obs - v_ego the cone barrier is

    h = <p, w> + |w| * sqrt(|p|^2 - r^2)

which is nonnegative exactly when w avoids the cone of tangent lines from the
ego to the obstacle disc. `collision_cone_h` is this exact form. `relaxed_h`
replaces |w| by sqrt(|w|^2 + eps_v^2) so gradients stay defined at w = 0, and
extends the barrier inside the disc with a linear penetration penalty; the two
branches agree on the disc boundary for every w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cbf import SLACK_FREE, BarrierEvaluation, ConstraintRow
from .vehicle import ControlInput, StateJacobians, VehicleState


@dataclass
class Obstacle:
    x: float
    y: float
    vx: float
    vy: float
    radius: float

    def validate(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("obstacle radius must be positive")

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    def advanced(self, dt: float) -> "Obstacle":
        """Constant-velocity prediction dt seconds ahead."""
        return Obstacle(self.x + self.vx * dt, self.y + self.vy * dt,
                        self.vx, self.vy, self.radius)


@dataclass
class C3bfParams:
    gamma: float = 0.3          # discrete CBF decay rate, in (0, 1]
    eps_v: float = 0.1          # velocity-norm regularization (m/s)
    inside_slope: float = 5.0   # penetration penalty slope inside the disc

    def validate(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.eps_v <= 0.0:
            raise ValueError("eps_v must be positive")
        if self.inside_slope <= 0.0:
            raise ValueError("inside_slope must be positive")


def _relative(ego: VehicleState, obs: Obstacle):
    p = obs.position() - np.array([ego.x, ego.y])
    v_ego = ego.v * np.array([np.cos(ego.psi), np.sin(ego.psi)])
    w = obs.velocity() - v_ego
    return p, w


def _chain_to_state(ego: VehicleState, dh_dp: np.ndarray, dh_dw: np.ndarray) -> np.ndarray:
    """Map gradients in (p, w) to the ego state (x, y, psi, v)."""
    c, s = np.cos(ego.psi), np.sin(ego.psi)
    return np.array([
        -dh_dp[0],
        -dh_dp[1],
        float(dh_dw @ (ego.v * np.array([s, -c]))),
        float(dh_dw @ np.array([-c, -s])),
    ])


def cone_half_angle(p_norm: float, radius: float) -> float:
    return float(np.arcsin(min(radius / max(p_norm, 1e-12), 1.0)))


def collision_cone_h(ego: VehicleState, obs: Obstacle, params: C3bfParams) -> BarrierEvaluation:
    """Exact cone barrier; delegates to relaxed_h inside the disc.

    The sign of the value is the cone membership test: h >= 0 iff the relative
    velocity lies outside the collision cone. At w = 0 the value is exactly 0
    (boundary of the cone) but the gradient has a kink there; use relaxed_h
    when a well-defined gradient at w = 0 matters.
    """
    p, w = _relative(ego, obs)
    p_norm = float(np.linalg.norm(p))
    if p_norm <= obs.radius:
        return relaxed_h(ego, obs, params)

    root = float(np.sqrt(p_norm * p_norm - obs.radius * obs.radius))
    w_norm = float(np.linalg.norm(w))
    value = float(p @ w) + w_norm * root

    w_safe = max(w_norm, 1e-12)
    dh_dp = w + (w_norm / root) * p
    dh_dw = p + (root / w_safe) * w
    return BarrierEvaluation(value, _chain_to_state(ego, dh_dp, dh_dw), np.zeros(2))


def relaxed_h(ego: VehicleState, obs: Obstacle, params: C3bfParams) -> BarrierEvaluation:
    """Regularized cone barrier, defined and differentiable for any w.

    Outside the disc the velocity norm is replaced by
    sqrt(|w|^2 + eps_v^2); inside, the barrier continues as
    inside_slope * (|p| - r) + <p, w>, matching the outside branch on the
    boundary (where sqrt(|p|^2 - r^2) vanishes) for every w.
    """
    p, w = _relative(ego, obs)
    p_norm = float(np.linalg.norm(p))
    r = obs.radius

    if p_norm > r:
        root = float(np.sqrt(p_norm * p_norm - r * r))
        m = float(np.sqrt(w @ w + params.eps_v ** 2))
        value = float(p @ w) + m * root
        dh_dp = w + (m / root) * p
        dh_dw = p + (root / m) * w
    else:
        value = params.inside_slope * (p_norm - r) + float(p @ w)
        p_safe = max(p_norm, 1e-9)
        dh_dp = params.inside_slope * (p / p_safe) + w
        dh_dw = p.copy()

    return BarrierEvaluation(value, _chain_to_state(ego, dh_dp, dh_dw), np.zeros(2))


def c3bf_constraint_row(
    ego: VehicleState,
    obs_now: Obstacle,
    obs_next: Obstacle,
    jac: StateJacobians,
    u_nom: ControlInput,
    params: C3bfParams,
    slack_index: int = SLACK_FREE,
) -> ConstraintRow:
    """One-step discrete CBF row for the relaxed cone barrier.

    Same shape as the headway row: linearize h(x+(u)) at the nominal input and
    require h_{k+1} >= (1 - gamma) h_k, written as coeffs . u <= rhs.
    """
    x = ego.as_array()
    u0 = u_nom.as_array()
    x_next = jac.A @ x + jac.B @ u0 + jac.c

    here = relaxed_h(ego, obs_now, params)
    nxt = relaxed_h(VehicleState.from_array(x_next), obs_next, params)
    grad_u = jac.B.T @ nxt.grad_state

    coeffs = -grad_u
    rhs = nxt.value - (1.0 - params.gamma) * here.value - float(grad_u @ u0)
    return ConstraintRow(coeffs, rhs, slack_index)


def clearance(ego: VehicleState, obs: Obstacle) -> float:
    """Center distance minus radius; negative means overlap."""
    p, _ = _relative(ego, obs)
    return float(np.linalg.norm(p)) - obs.radius
