"""Time-shift-governed MPC with control barrier functions, plus a simulator.

The controller (mpc) tracks a moving target on a road centerline and carries
soft discrete CBF rows for headway keeping (cbf) and collision-cone obstacle
avoidance (collision_cone). The governor retimes the target reference so the
constrained closed loop stays admissible. scenario/simulation/outputs wire it
all into reproducible closed-loop runs.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("shiftgov")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0+source"

from .cbf import AccCbfParams, h_acc, headway_barrier, path_gap
from .collision_cone import (C3bfParams, Obstacle, clearance,
                             collision_cone_h, cone_half_angle, relaxed_h)
from .governor import TsgSettings, TsgState, is_admissible, update_shift
from .mpc import Controller, ControllerMemory, MpcConfig, MpcSolution
from .outputs import emit_outputs
from .qp import DenseQp, QpSettings, QpSolution, QpStatus, kkt_residual, solve
from .road import (AccelSchedule, Centerline, SpeedProfile, TargetTrajectory,
                   build_centerline, rollout_schedule, sample_reference,
                   shifted_target, target_state)
from .scenario import (ObstacleSpec, Scenario, ScenarioInvalid, VelocitySchedule,
                       bundled_names, load_bundled)
from .simulation import Metrics, SimLog, run
from .vehicle import (ControlInput, VehicleParams, VehicleState, derivative,
                      linearize, rollout_with_jacobians, step)

__all__ = [
    "__version__",
    "AccCbfParams", "h_acc", "headway_barrier", "path_gap",
    "C3bfParams", "Obstacle", "clearance", "collision_cone_h",
    "cone_half_angle", "relaxed_h",
    "TsgSettings", "TsgState", "is_admissible", "update_shift",
    "Controller", "ControllerMemory", "MpcConfig", "MpcSolution",
    "emit_outputs",
    "DenseQp", "QpSettings", "QpSolution", "QpStatus", "kkt_residual", "solve",
    "AccelSchedule", "Centerline", "SpeedProfile", "TargetTrajectory",
    "build_centerline", "rollout_schedule", "sample_reference",
    "shifted_target", "target_state",
    "ObstacleSpec", "Scenario", "ScenarioInvalid", "VelocitySchedule",
    "bundled_names", "load_bundled",
    "Metrics", "SimLog", "run",
    "ControlInput", "VehicleParams", "VehicleState", "derivative",
    "linearize", "rollout_with_jacobians", "step",
]
