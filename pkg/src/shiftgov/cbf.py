"""Time-headway barrier for lead-vehicle following, with discrete CBF rows.

The barrier is h = d - T_h * v_ego - D_0 where d is the along-path gap between
ego and lead, measured by arc-length projection onto the road centerline.
Keeping h >= 0 keeps the gap above the standstill distance plus a speed-
proportional headway. Constraint rows implement the discrete-time condition
h_{k+1} - (1 - gamma) h_k >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .road import Centerline
from .vehicle import ControlInput, StateJacobians, VehicleState

SLACK_FREE = -1


@dataclass
class AccCbfParams:
    time_headway: float = 1.0  # T_h (s)
    standstill: float = 5.0    # D_0 (m)
    gamma: float = 0.3         # discrete CBF decay rate, in (0, 1]

    def validate(self) -> None:
        if self.time_headway <= 0.0:
            raise ValueError("time_headway must be positive")
        if self.standstill <= 0.0:
            raise ValueError("standstill must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass
class BarrierEvaluation:
    value: float
    grad_state: np.ndarray  # d h / d (x, y, psi, v)
    grad_input: np.ndarray  # d h(x+) / d (a, delta) through one-step prediction


@dataclass
class ConstraintRow:
    """One inequality coeffs . z <= rhs over a local decision vector."""

    coeffs: np.ndarray
    rhs: float
    slack_index: int = SLACK_FREE


def headway_barrier(gap: float, v_ego: float, params: AccCbfParams) -> float:
    """Barrier value from an already-computed along-path gap."""
    return gap - params.time_headway * v_ego - params.standstill


def discrete_cbf_residual(h_k: float, h_k1: float, gamma: float) -> float:
    """h_{k+1} - (1 - gamma) h_k; nonnegative when the CBF condition holds."""
    return h_k1 - (1.0 - gamma) * h_k


def _frame_projection_gradient(frame, point) -> np.ndarray:
    tang = frame.tangent
    normal = np.array([-tang[1], tang[0]])
    p = np.asarray(point, dtype=float)
    e_n = float(np.dot(p - frame.point, normal))
    denom = 1.0 - frame.curvature * e_n
    if abs(denom) < 1e-9:
        denom = np.copysign(1e-9, denom)
    return tang / denom


def projection_gradient(centerline: Centerline, point, s: float) -> np.ndarray:
    """d s* / d p of the arc-length projection, at projection s of point.

    Off the path the derivative picks up the curvature correction
    t_hat / (1 - kappa * e_n); on the path it is the unit tangent.
    """
    return _frame_projection_gradient(centerline.frame_at(s), point)


def path_gap(
    centerline: Centerline,
    ego: VehicleState,
    lead_s: float,
    s_hint: float | None = None,
) -> tuple[float, np.ndarray, float]:
    """Along-path gap d = s_lead - s_ego and d(gap)/d(x, y); also returns s_ego."""
    s_ego, frame = centerline.project_frame((ego.x, ego.y), s_hint)
    dgap = -_frame_projection_gradient(frame, (ego.x, ego.y))
    return lead_s - s_ego, dgap, s_ego


def h_acc(
    ego: VehicleState,
    lead_s: float,
    params: AccCbfParams,
    centerline: Centerline,
    s_hint: float | None = None,
) -> BarrierEvaluation:
    """Headway barrier and its gradient w.r.t. the ego state.

    grad_input is left zero here; rows that need the input direction push the
    state gradient through the one-step Jacobians (see acc_constraint_row).
    """
    gap, dgap, _ = path_gap(centerline, ego, lead_s, s_hint)
    value = headway_barrier(gap, ego.v, params)
    grad = np.array([dgap[0], dgap[1], 0.0, -params.time_headway])
    return BarrierEvaluation(value, grad, np.zeros(2))


def acc_constraint_row(
    ego: VehicleState,
    lead_s_now: float,
    lead_s_next: float,
    jac: StateJacobians,
    u_nom: ControlInput,
    params: AccCbfParams,
    centerline: Centerline,
    slack_index: int = SLACK_FREE,
) -> ConstraintRow:
    """One-step CBF row over the stage input u = (a, delta).

    Linearizes h(x+(u)) around the nominal input of `jac` and encodes
    h(x+(u)) >= (1 - gamma) h(x) as coeffs . u <= rhs (plus an optional slack
    that relaxes the row when slack_index >= 0).
    """
    x = ego.as_array()
    u0 = u_nom.as_array()
    x_next = jac.A @ x + jac.B @ u0 + jac.c

    here = h_acc(ego, lead_s_now, params, centerline)
    nxt = h_acc(VehicleState.from_array(x_next), lead_s_next, params, centerline)
    grad_u = jac.B.T @ nxt.grad_state

    coeffs = -grad_u
    rhs = nxt.value - (1.0 - params.gamma) * here.value - float(grad_u @ u0)
    return ConstraintRow(coeffs, rhs, slack_index)
