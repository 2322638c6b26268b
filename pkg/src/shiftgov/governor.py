"""Time shift governor.

The governor never touches the controller's constraints. It retimes the target
reference: the controller tracks target_state(t + t_sh) with t_sh <= 0, and the
governor keeps t_sh as close to zero as the constraints allow. A candidate
shift is admissible when an honest forward simulation of the closed loop
(controller in the loop, constant-velocity predictions for the lead and every
obstacle) keeps all barrier values at or above the safety margin, with no
barrier slack firing and no degraded QP solve.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from .cbf import h_acc, headway_barrier
from .collision_cone import Obstacle, relaxed_h
from .mpc import Controller, ControllerMemory
from .road import TargetTrajectory
from .vehicle import VehicleState, step

log = logging.getLogger(__name__)

SLACK_FIRE_TOL = 1e-6


@dataclass
class TsgSettings:
    t_sh_min: float = -6.0            # most negative allowed shift (s)
    bisection_tol: float = 0.01       # shift resolution (s)
    max_bisections: int = 16
    horizon: int = 25                 # admissibility look-ahead (steps)
    update_period: float = 0.1        # governor update spacing (s)
    safety_margin: float = 0.0        # required barrier floor in the look-ahead

    def validate(self) -> None:
        if self.t_sh_min >= 0.0:
            raise ValueError("t_sh_min must be negative")
        if self.bisection_tol <= 0.0:
            raise ValueError("bisection_tol must be positive")
        if self.max_bisections < 1:
            raise ValueError("max_bisections must be at least 1")
        if self.horizon < 1:
            raise ValueError("admissibility horizon must be at least 1 step")
        if self.update_period <= 0.0:
            raise ValueError("update_period must be positive")
        if self.safety_margin < 0.0:
            raise ValueError("safety_margin must be nonnegative")


@dataclass
class TsgState:
    t_sh: float = 0.0
    last_update_time: float = -np.inf
    saturated: bool = False


def is_admissible(
    controller: Controller,
    x0: VehicleState,
    t: float,
    t_sh_candidate: float,
    traj: TargetTrajectory,
    lead: VehicleState | None,
    obstacles: list[Obstacle],
    settings: TsgSettings,
    memory: ControllerMemory,
) -> bool:
    """Forward-simulate the closed loop at a frozen candidate shift.

    The sandbox copies the controller memory, so probing a candidate leaves the
    live controller bit-identical. The lead advances along the centerline at
    its current speed; obstacles follow straight constant-velocity tracks.
    """
    dt = controller.cfg.dt
    mem = copy.deepcopy(memory)
    x = x0
    lead_k = lead
    lead_s = None
    if lead is not None:
        lead_s = controller.centerline.project((lead.x, lead.y), memory.lead_s_hint)
    obs_k = list(obstacles)

    for k in range(settings.horizon):
        u, sol = controller.step(x, t + k * dt, traj, t_sh_candidate, lead_k, obs_k, mem)
        if sol.degraded:
            return False
        if sol.max_slack >= SLACK_FIRE_TOL:
            return False

        x = step(x, u, dt, controller.vehicle)
        if lead_k is not None:
            lead_s = lead_s + lead_k.v * dt
            s_clamped = min(lead_s, controller.centerline.length)
            p = controller.centerline.point_at(s_clamped)
            lead_k = VehicleState(float(p[0]), float(p[1]),
                                  controller.centerline.heading_at(s_clamped), lead_k.v)
            gap = lead_s - controller.centerline.project((x.x, x.y), mem.ego_s_hint)
            if headway_barrier(gap, x.v, controller.acc) < settings.safety_margin:
                return False
        obs_k = [o.advanced(dt) for o in obs_k]
        for o in obs_k:
            if relaxed_h(x, o, controller.cone).value < settings.safety_margin:
                return False
    return True


def update_shift(
    state: TsgState,
    controller: Controller,
    x0: VehicleState,
    t: float,
    traj: TargetTrajectory,
    lead: VehicleState | None,
    obstacles: list[Obstacle],
    settings: TsgSettings,
    memory: ControllerMemory,
) -> TsgState:
    """One governor update; returns the new shift state.

    Checks t_sh = 0 first (zero-cost path in benign conditions), bisects
    between the current admissible shift and 0 otherwise, and falls back to
    doubling toward t_sh_min when even the current shift has gone inadmissible.
    """
    settings.validate()

    def adm(candidate: float) -> bool:
        return is_admissible(controller, x0, t, candidate, traj, lead,
                             obstacles, settings, memory)

    if adm(0.0):
        return TsgState(0.0, t, False)

    current = min(state.t_sh, 0.0)
    if current < 0.0 and adm(current):
        lo, hi = current, 0.0  # lo admissible, hi not
        for _ in range(settings.max_bisections):
            if hi - lo <= settings.bisection_tol:
                break
            mid = 0.5 * (lo + hi)
            if adm(mid):
                lo = mid
            else:
                hi = mid
        return TsgState(lo, t, False)

    # current shift failed too: expand toward t_sh_min by doubling
    probe = -max(settings.bisection_tol, abs(settings.t_sh_min) / 64.0)
    last_bad = current
    while True:
        candidate = max(settings.t_sh_min, current + probe)
        if adm(candidate):
            lo, hi = candidate, last_bad
            for _ in range(settings.max_bisections):
                if hi - lo <= settings.bisection_tol:
                    break
                mid = 0.5 * (lo + hi)
                if adm(mid):
                    lo = mid
                else:
                    hi = mid
            return TsgState(lo, t, False)
        if candidate <= settings.t_sh_min:
            log.warning(
                "governor saturated at t_sh_min=%.3f s (t=%.2f): no admissible shift",
                settings.t_sh_min, t,
            )
            return TsgState(settings.t_sh_min, t, True)
        last_bad = candidate
        probe *= 2.0
