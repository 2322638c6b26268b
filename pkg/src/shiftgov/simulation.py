"""Closed-loop simulation: governor, controller, plant, and bookkeeping.

One global dt is shared by the plant, the controller, and the log, so every
record sits exactly on the k*dt grid. Per step the order is: governor update
(when due), controller solve, log, plant advance. The terminal state gets a
final record of its own; its input columns repeat the last applied input and
its solver columns are zero since nothing is solved at the terminal time.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace

import numpy as np

from .cbf import h_acc as eval_h_acc
from .collision_cone import relaxed_h
from .governor import TsgState, update_shift
from .mpc import Controller, ControllerMemory
from .road import AccelSchedule, rollout_schedule
from .scenario import Scenario
from .vehicle import VehicleState, step as plant_step

log = logging.getLogger(__name__)


@dataclass
class SimLog:
    """Uniform-grid record of one run; n_steps + 1 rows."""

    t: np.ndarray           # (n+1,)
    ego: np.ndarray         # (n+1, 4) x, y, psi, v
    inputs: np.ndarray      # (n+1, 2) input applied over [t_k, t_{k+1})
    lead: np.ndarray        # (n+1, 3) x, y, v; nan rows when there is no lead
    obstacles: np.ndarray   # (n+1, K, 5) x, y, vx, vy, radius snapshots
    t_sh: np.ndarray        # (n+1,)
    h_acc: np.ndarray       # (n+1,) nan when there is no lead
    h_obs: np.ndarray       # (n+1, K)
    slack_acc: np.ndarray   # (n+1,) max over the horizon at each solve
    slack_obs: np.ndarray   # (n+1, K)
    iterations: np.ndarray  # (n+1,)
    solve_time: np.ndarray  # (n+1,)
    degraded: np.ndarray    # (n+1,) bool

    @property
    def n_obstacles(self) -> int:
        return self.h_obs.shape[1]


@dataclass
class Metrics:
    """Safety and tracking summary of one run; None marks absent series."""

    min_h_acc: float | None
    min_clearance: float | None     # min over time and obstacles of dist - r
    max_violation_depth: float      # how far any barrier dipped below zero
    lateral_rms: float              # vs the centerline, whole run
    speed_rms: float                # vs the shifted reference speed
    max_abs_shift: float
    steps_shift_active: int
    solve_time_mean: float
    solve_time_max: float
    degraded_steps: int

    def to_dict(self) -> dict:
        return {
            "min_h_acc": self.min_h_acc,
            "min_clearance": self.min_clearance,
            "max_violation_depth": self.max_violation_depth,
            "lateral_rms": self.lateral_rms,
            "speed_rms": self.speed_rms,
            "max_abs_shift": self.max_abs_shift,
            "steps_shift_active": self.steps_shift_active,
            "solve_time_mean": self.solve_time_mean,
            "solve_time_max": self.solve_time_max,
            "degraded_steps": self.degraded_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Metrics":
        return cls.from_dict(json.loads(text))


def run(scenario: Scenario, governor_enabled: bool | None = None) -> tuple[SimLog, Metrics]:
    """Run the scenario to completion; deterministic for a given scenario.

    governor_enabled, when given, overrides the scenario flag (the CLI's
    --no-governor switch). A degraded controller solve is logged and the run
    continues; the plant always receives the clipped first input.
    """
    scenario.validate()
    if governor_enabled is not None:
        scenario = replace(scenario, governor_enabled=governor_enabled)

    cl = scenario.centerline()
    controller = Controller(scenario.vehicle, cl, scenario.acc, scenario.cone, scenario.mpc)
    dt = scenario.mpc.dt
    n_steps = int(round(scenario.duration / dt))
    n_obs = len(scenario.obstacles)

    # pad the reference past the horizon so governor probes never run off it
    n_pad = scenario.tsg.horizon + scenario.mpc.horizon + 2
    traj = scenario.reference_trajectory(cl, n_steps + n_pad)

    lead_states = None
    lead_s = None
    if scenario.lead is not None:
        schedule = AccelSchedule.from_pairs(scenario.lead.accel_pairs)
        lead_traj, lead_s, _ = rollout_schedule(
            cl, scenario.lead.s0, scenario.lead.v0, schedule, 0.0, dt, n_steps + 1)
        lead_states = lead_traj.states

    x = scenario.initial_state(cl)
    memory = ControllerMemory()
    gov = TsgState()

    rec = SimLog(
        t=np.arange(n_steps + 1) * dt,
        ego=np.zeros((n_steps + 1, 4)),
        inputs=np.zeros((n_steps + 1, 2)),
        lead=np.full((n_steps + 1, 3), np.nan),
        obstacles=np.zeros((n_steps + 1, n_obs, 5)),
        t_sh=np.zeros(n_steps + 1),
        h_acc=np.full(n_steps + 1, np.nan),
        h_obs=np.zeros((n_steps + 1, n_obs)),
        slack_acc=np.zeros(n_steps + 1),
        slack_obs=np.zeros((n_steps + 1, n_obs)),
        iterations=np.zeros(n_steps + 1, dtype=int),
        solve_time=np.zeros(n_steps + 1),
        degraded=np.zeros(n_steps + 1, dtype=bool),
    )

    def snapshot(k: int, t: float, lead_k, obs_k) -> None:
        rec.ego[k] = x.as_array()
        if lead_k is not None:
            rec.lead[k] = (lead_k.x, lead_k.y, lead_k.v)
            rec.h_acc[k] = eval_h_acc(x, float(lead_s[k]), scenario.acc, cl,
                                      memory.ego_s_hint).value
        for i, o in enumerate(obs_k):
            rec.obstacles[k, i] = (o.x, o.y, o.vx, o.vy, o.radius)
            rec.h_obs[k, i] = relaxed_h(x, o, scenario.cone).value
        rec.t_sh[k] = gov.t_sh

    for k in range(n_steps):
        t = k * dt
        lead_k = (VehicleState.from_array(lead_states[k])
                  if lead_states is not None else None)
        obs_k = [spec.at_time(t) for spec in scenario.obstacles]

        if scenario.governor_enabled and t - gov.last_update_time >= scenario.tsg.update_period - 1e-9:
            gov = update_shift(gov, controller, x, t, traj, lead_k, obs_k,
                               scenario.tsg, memory)

        u, sol = controller.step(x, t, traj, gov.t_sh, lead_k, obs_k, memory)
        if sol.degraded:
            log.warning("degraded solve at t=%.2f s: %s (kkt %.2e)",
                        t, sol.status.name, sol.kkt_residual)

        snapshot(k, t, lead_k, obs_k)
        rec.inputs[k] = (u.a, u.delta)
        if sol.acc_slack.size:
            rec.slack_acc[k] = float(np.max(sol.acc_slack))
        if sol.obs_slack.size:
            rec.slack_obs[k] = np.max(sol.obs_slack, axis=1)
        rec.iterations[k] = sol.iterations
        rec.solve_time[k] = sol.solve_time
        rec.degraded[k] = sol.degraded

        x = plant_step(x, u, dt, scenario.vehicle)

    lead_k = (VehicleState.from_array(lead_states[n_steps])
              if lead_states is not None else None)
    obs_k = [spec.at_time(n_steps * dt) for spec in scenario.obstacles]
    snapshot(n_steps, n_steps * dt, lead_k, obs_k)
    rec.inputs[n_steps] = rec.inputs[n_steps - 1] if n_steps else 0.0

    return rec, compute_metrics(rec, scenario, cl, traj)


def compute_metrics(rec: SimLog, scenario: Scenario, cl, traj) -> Metrics:
    n = len(rec.t) - 1
    has_lead = scenario.lead is not None

    barrier_min = np.inf
    if has_lead:
        barrier_min = min(barrier_min, float(np.min(rec.h_acc)))
    if rec.n_obstacles:
        barrier_min = min(barrier_min, float(np.min(rec.h_obs)))
    violation = max(0.0, -barrier_min) if np.isfinite(barrier_min) else 0.0

    clearance = None
    if rec.n_obstacles:
        d = np.linalg.norm(rec.obstacles[:, :, :2] - rec.ego[:, None, :2], axis=2)
        clearance = float(np.min(d - rec.obstacles[:, :, 4]))

    s_ego, pts, tangs, _, _ = cl.project_frames(rec.ego[:, :2])
    normals = np.column_stack([-tangs[:, 1], tangs[:, 0]])
    e_n = np.sum((rec.ego[:, :2] - pts) * normals, axis=1)
    lateral_rms = float(np.sqrt(np.mean(e_n**2)))

    v_ref = np.array([traj.state_at(rec.t[k] + rec.t_sh[k]).v for k in range(n + 1)])
    speed_rms = float(np.sqrt(np.mean((rec.ego[:, 3] - v_ref) ** 2)))

    solves = rec.solve_time[:n] if n else rec.solve_time[:1]
    return Metrics(
        min_h_acc=float(np.min(rec.h_acc)) if has_lead else None,
        min_clearance=clearance,
        max_violation_depth=violation,
        lateral_rms=lateral_rms,
        speed_rms=speed_rms,
        max_abs_shift=float(np.max(np.abs(rec.t_sh))),
        steps_shift_active=int(np.sum(rec.t_sh < 0.0)),
        solve_time_mean=float(np.mean(solves)),
        solve_time_max=float(np.max(solves)),
        degraded_steps=int(np.sum(rec.degraded)),
    )
