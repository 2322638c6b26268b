"""Receding-horizon tracking controller with soft discrete CBF rows.

Each control step condenses the LTV prediction (exact RK4 Jacobians along a
nominal rollout) into a dense QP over stacked input deviations plus one slack
per barrier row. Barrier rows are softened so the QP stays feasible no matter
the state; strict constraint enforcement is the governor's job. Input and
input-rate limits stay hard.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cbf import AccCbfParams
from .collision_cone import C3bfParams, Obstacle, relaxed_h
from .qp import DenseQp, QpSettings, QpStatus, solve
from .road import Centerline, TargetTrajectory, shifted_target
from .vehicle import (ControlInput, VehicleParams, VehicleState,
                      rollout_with_jacobians, wrap_angle)


@dataclass
class MpcConfig:
    horizon: int = 12
    dt: float = 0.1
    q: np.ndarray = field(default_factory=lambda: np.diag([8.0, 8.0, 4.0, 4.0]))
    r: np.ndarray = field(default_factory=lambda: np.diag([0.4, 8.0]))
    p: np.ndarray = field(default_factory=lambda: np.diag([16.0, 16.0, 8.0, 8.0]))
    slack_weight: float = 1e5
    a_rate: float = 12.0       # max |da/dt| (m/s^3)
    delta_rate: float = 1.2    # max |ddelta/dt| (rad/s)
    qp: QpSettings = field(default_factory=QpSettings)

    def validate(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        for name, w in (("q", self.q), ("p", self.p)):
            w = np.asarray(w)
            if w.shape != (4, 4) or not np.allclose(w, w.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric 4x4")
            if np.min(np.linalg.eigvalsh(w)) < -1e-12:
                raise ValueError(f"{name} must be positive semidefinite")
        r = np.asarray(self.r)
        if r.shape != (2, 2) or not np.allclose(r, r.T, atol=1e-12):
            raise ValueError("r must be symmetric 2x2")
        if np.min(np.linalg.eigvalsh(r)) <= 0.0:
            raise ValueError("r must be positive definite")
        weight_floor = 1e3 * max(
            float(np.max(np.abs(np.linalg.eigvalsh(self.q)))),
            float(np.max(np.abs(np.linalg.eigvalsh(self.r)))),
        )
        if self.slack_weight < weight_floor:
            raise ValueError(
                f"slack_weight {self.slack_weight:g} below 1e3 * max(|Q|, |R|) = {weight_floor:g}"
            )
        if self.a_rate <= 0.0 or self.delta_rate <= 0.0:
            raise ValueError("rate limits must be positive")


@dataclass
class MpcSolution:
    inputs: np.ndarray        # (N, 2) absolute inputs
    states: np.ndarray        # (N+1, 4) predicted states, row 0 = x0
    acc_slack: np.ndarray     # (N,) or empty when no lead
    obs_slack: np.ndarray     # (K, N)
    stage_costs: np.ndarray   # (N,) tracking + input cost per stage
    status: QpStatus
    degraded: bool
    iterations: int
    kkt_residual: float
    solve_time: float

    @property
    def max_slack(self) -> float:
        worst = 0.0
        if self.acc_slack.size:
            worst = max(worst, float(np.max(self.acc_slack)))
        if self.obs_slack.size:
            worst = max(worst, float(np.max(self.obs_slack)))
        return worst


@dataclass
class ControllerMemory:
    inputs: np.ndarray | None = None      # previous optimal inputs (N, 2)
    u_applied: np.ndarray | None = None   # input actually applied last step
    z: np.ndarray | None = None
    y: np.ndarray | None = None
    layout: tuple | None = None           # (N, has_lead, n_obs)
    ego_s_hint: float | None = None
    lead_s_hint: float | None = None


def _shift_stage_blocks(arr: np.ndarray, n_stages: int, width: int) -> np.ndarray:
    """Shift per-stage blocks one stage earlier, repeating the final block."""
    out = arr.copy()
    blocks = arr[: n_stages * width].reshape(n_stages, width)
    shifted = np.vstack([blocks[1:], blocks[-1:]])
    out[: n_stages * width] = shifted.ravel()
    return out


class Controller:
    """Tracking MPC over the road centerline with barrier rows."""

    def __init__(
        self,
        vehicle: VehicleParams,
        centerline: Centerline,
        acc: AccCbfParams,
        cone: C3bfParams,
        cfg: MpcConfig,
    ) -> None:
        vehicle.validate()
        acc.validate()
        cone.validate()
        cfg.validate()
        self.vehicle = vehicle
        self.centerline = centerline
        self.acc = acc
        self.cone = cone
        self.cfg = cfg

    # ------------------------------------------------------------------ build

    def build_problem(
        self,
        x0: VehicleState,
        ref_states: np.ndarray,
        lead_track: np.ndarray | None,
        obstacles: list[Obstacle],
        u_nom: np.ndarray,
        u_prev: np.ndarray,
        ego_s_hint: float | None = None,
    ):
        """Assemble the condensed QP.

        ref_states: (N+1, 4) target states over the horizon.
        lead_track: (N+1, 2) rows of (s_lead, v_lead) or None.
        u_nom: (N, 2) nominal inputs defining the linearization rollout.
        u_prev: (2,) input applied at the previous step (rate anchor).
        Returns (DenseQp, meta dict).
        """
        cfg = self.cfg
        n_h = cfg.horizon
        dt = cfg.dt
        n_du = 2 * n_h
        has_lead = lead_track is not None
        n_obs = len(obstacles)
        n_slack = n_h * (int(has_lead) + n_obs)
        nz = n_du + n_slack

        # nominal rollout and stage Jacobians
        xs, a_mats, b_mats, _ = rollout_with_jacobians(x0, u_nom, dt, self.vehicle)

        # input-to-state sensitivities of the condensed prediction
        sens = np.zeros((n_h + 1, 4, n_du))
        for k in range(n_h):
            sens[k + 1] = a_mats[k] @ sens[k]
            sens[k + 1][:, 2 * k : 2 * k + 2] += b_mats[k]

        # tracking cost; reference heading unwrapped toward the nominal
        refs = np.array(ref_states, dtype=float, copy=True)
        for k in range(n_h + 1):
            refs[k, 2] = xs[k, 2] + wrap_angle(refs[k, 2] - xs[k, 2])

        h_mat = np.zeros((nz, nz))
        g_vec = np.zeros(nz)
        for k in range(1, n_h + 1):
            w_k = cfg.p if k == n_h else cfg.q
            err = xs[k] - refs[k]
            ws = w_k @ sens[k]
            h_mat[:n_du, :n_du] += 2.0 * sens[k].T @ ws
            g_vec[:n_du] += 2.0 * sens[k].T @ (w_k @ err)
        r_mat = np.asarray(cfg.r, dtype=float)
        for k in range(n_h):
            sl = slice(2 * k, 2 * k + 2)
            h_mat[sl, sl] += 2.0 * r_mat
            g_vec[sl] += 2.0 * r_mat @ u_nom[k]
        g_vec[n_du:] = cfg.slack_weight

        # bounds: inputs relative to the nominal, slacks nonnegative
        lb = np.full(nz, -np.inf)
        ub = np.full(nz, np.inf)
        for k in range(n_h):
            lb[2 * k] = self.vehicle.a_min - u_nom[k, 0]
            ub[2 * k] = self.vehicle.a_max - u_nom[k, 0]
            lb[2 * k + 1] = -self.vehicle.delta_max - u_nom[k, 1]
            ub[2 * k + 1] = self.vehicle.delta_max - u_nom[k, 1]
        lb[n_du:] = 0.0

        rows = []
        rhs = []

        # input-rate rows: |u_k - u_{k-1}| <= rate * dt
        rate_bound = np.array([cfg.a_rate * dt, cfg.delta_rate * dt])
        for k in range(n_h):
            du_prev = u_nom[k] - (u_prev if k == 0 else u_nom[k - 1])
            for i in range(2):
                row = np.zeros(nz)
                row[2 * k + i] = 1.0
                if k > 0:
                    row[2 * (k - 1) + i] = -1.0
                rows.append(row)
                rhs.append(rate_bound[i] - du_prev[i])
                rows.append(-row)
                rhs.append(rate_bound[i] + du_prev[i])

        # headway barrier rows, one per stage, softened by per-stage slacks
        h_acc_nom = np.zeros(n_h + 1)
        if has_lead:
            hints = None
            if ego_s_hint is not None:
                chords = np.hypot(np.diff(xs[:, 0]), np.diff(xs[:, 1]))
                hints = ego_s_hint + np.concatenate([[0.0], np.cumsum(chords)])
            s_ego, pts, tangs, _, curvs = self.centerline.project_frames(xs[:, :2], hints)
            normals = np.column_stack([-tangs[:, 1], tangs[:, 0]])
            e_n = np.sum((xs[:, :2] - pts) * normals, axis=1)
            denom = 1.0 - curvs * e_n
            denom = np.where(np.abs(denom) < 1e-9, np.copysign(1e-9, denom), denom)
            dgap = -tangs / denom[:, None]
            h_acc_nom = (lead_track[:, 0] - s_ego
                         - self.acc.time_headway * xs[:, 3] - self.acc.standstill)
            grads = np.zeros((n_h + 1, 4))
            grads[:, :2] = dgap
            grads[:, 3] = -self.acc.time_headway
            decay = 1.0 - self.acc.gamma
            for k in range(n_h):
                row = np.zeros(nz)
                row[:n_du] = -(grads[k + 1] @ sens[k + 1] - decay * (grads[k] @ sens[k]))
                row[n_du + k] = -1.0
                rows.append(row)
                rhs.append(h_acc_nom[k + 1] - decay * h_acc_nom[k])

        # cone barrier rows per obstacle
        obs_h_nom = np.zeros((n_obs, n_h + 1))
        for j, obs in enumerate(obstacles):
            grads = np.empty((n_h + 1, 4))
            for k in range(n_h + 1):
                ev = relaxed_h(VehicleState.from_array(xs[k]), obs.advanced(k * dt), self.cone)
                obs_h_nom[j, k] = ev.value
                grads[k] = ev.grad_state
            decay = 1.0 - self.cone.gamma
            base = n_du + n_h * (int(has_lead) + j)
            for k in range(n_h):
                row = np.zeros(nz)
                row[:n_du] = -(grads[k + 1] @ sens[k + 1] - decay * (grads[k] @ sens[k]))
                row[base + k] = -1.0
                rows.append(row)
                rhs.append(obs_h_nom[j, k + 1] - decay * obs_h_nom[j, k])

        qp = DenseQp(
            H=h_mat,
            g=g_vec,
            A=np.array(rows).reshape(-1, nz),
            b=np.array(rhs, dtype=float),
            lb=lb,
            ub=ub,
        )
        meta = {
            "nominal_states": xs,
            "nominal_inputs": u_nom,
            "sens": sens,
            "refs": refs,
            "h_acc_nominal": h_acc_nom,
            "obs_h_nominal": obs_h_nom,
            "has_lead": has_lead,
            "n_obs": n_obs,
        }
        return qp, meta

    # ------------------------------------------------------------------- step

    def step(
        self,
        x0: VehicleState,
        t: float,
        traj: TargetTrajectory,
        t_sh: float,
        lead: VehicleState | None,
        obstacles: list[Obstacle],
        memory: ControllerMemory,
    ) -> tuple[ControlInput, MpcSolution]:
        """Solve one receding-horizon problem and advance the warm-start memory."""
        cfg = self.cfg
        n_h = cfg.horizon
        dt = cfg.dt
        t_start = time.perf_counter()

        refs = np.array(
            [shifted_target(traj, t + k * dt, t_sh).as_array() for k in range(n_h + 1)]
        )

        layout = (n_h, lead is not None, len(obstacles))
        can_shift = memory.inputs is not None and memory.inputs.shape == (n_h, 2)
        u_nom = (np.vstack([memory.inputs[1:], memory.inputs[-1:]])
                 if can_shift else np.zeros((n_h, 2)))
        u_prev = memory.u_applied if memory.u_applied is not None else np.zeros(2)
        warm_ok = can_shift and memory.layout == layout

        lead_track = None
        if lead is not None:
            s_lead = self.centerline.project((lead.x, lead.y), memory.lead_s_hint)
            memory.lead_s_hint = s_lead
            ks = np.arange(n_h + 1)
            lead_track = np.column_stack([s_lead + lead.v * dt * ks,
                                          np.full(n_h + 1, lead.v)])

        qp, meta = self.build_problem(
            x0, refs, lead_track, obstacles, u_nom, u_prev, memory.ego_s_hint
        )

        warm = None
        if warm_ok and memory.z is not None and memory.z.size == qp.n:
            n_du = 2 * n_h
            z0 = memory.z.copy()
            z0[:n_du] = 0.0
            for blk in range(layout[1] + layout[2]):
                base = n_du + blk * n_h
                z0[base : base + n_h] = _shift_stage_blocks(z0[base : base + n_h], n_h, 1)
            y0 = self._shift_duals(memory.y, layout) if memory.y is not None else None
            warm = (z0, y0) if y0 is not None and y0.size == qp.m + qp.n else None

        sol = solve(qp, cfg.qp, warm)

        n_du = 2 * n_h
        du = sol.z[:n_du].reshape(n_h, 2)
        u_star = u_nom + du
        u_star[:, 0] = np.clip(u_star[:, 0], self.vehicle.a_min, self.vehicle.a_max)
        u_star[:, 1] = np.clip(u_star[:, 1], -self.vehicle.delta_max, self.vehicle.delta_max)

        states = np.empty((n_h + 1, 4))
        states[0] = meta["nominal_states"][0]
        for k in range(1, n_h + 1):
            states[k] = meta["nominal_states"][k] + meta["sens"][k] @ sol.z[:n_du]

        slacks = sol.z[n_du:]
        has_lead = meta["has_lead"]
        acc_slack = slacks[:n_h].copy() if has_lead else np.zeros(0)
        obs_base = n_h if has_lead else 0
        obs_slack = slacks[obs_base:].reshape(meta["n_obs"], n_h) if meta["n_obs"] else np.zeros((0, n_h))

        stage_costs = np.empty(n_h)
        for k in range(n_h):
            w_k = cfg.p if k + 1 == n_h else cfg.q
            err = states[k + 1] - meta["refs"][k + 1]
            stage_costs[k] = float(err @ w_k @ err + u_star[k] @ cfg.r @ u_star[k])

        degraded = sol.status is not QpStatus.OPTIMAL
        u0 = ControlInput.from_array(u_star[0])

        memory.inputs = u_star
        memory.u_applied = u_star[0].copy()
        memory.z = sol.z.copy()
        y_rows = np.concatenate([sol.lam, sol.bound_duals])
        memory.y = y_rows
        memory.layout = layout
        memory.ego_s_hint = self.centerline.project((x0.x, x0.y), memory.ego_s_hint)

        result = MpcSolution(
            inputs=u_star,
            states=states,
            acc_slack=acc_slack,
            obs_slack=obs_slack,
            stage_costs=stage_costs,
            status=sol.status,
            degraded=degraded,
            iterations=sol.iterations,
            kkt_residual=sol.kkt_residual,
            solve_time=time.perf_counter() - t_start,
        )
        return u0, result

    def _shift_duals(self, y: np.ndarray, layout: tuple) -> np.ndarray:
        """Advance row duals one stage, mirroring the warm-start input shift."""
        n_h, has_lead, n_obs = layout
        n_du = 2 * n_h
        n_slack = n_h * (int(has_lead) + n_obs)
        m_rate = 4 * n_h
        m_rows = m_rate + n_h * (int(has_lead) + n_obs)
        if y.size != m_rows + n_du + n_slack:
            return None
        out = y.copy()
        out[:m_rate] = _shift_stage_blocks(y[:m_rate], n_h, 4)
        pos = m_rate
        for _ in range(int(has_lead) + n_obs):
            out[pos : pos + n_h] = _shift_stage_blocks(y[pos : pos + n_h], n_h, 1)
            pos += n_h
        # box duals: input blocks then slack blocks
        box = y[m_rows:].copy()
        box[:n_du] = _shift_stage_blocks(box[:n_du], n_h, 2)
        bpos = n_du
        for _ in range(int(has_lead) + n_obs):
            box[bpos : bpos + n_h] = _shift_stage_blocks(box[bpos : bpos + n_h], n_h, 1)
            bpos += n_h
        out[m_rows:] = box
        return out
