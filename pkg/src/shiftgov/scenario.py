"""Declarative scenario descriptions and their YAML form.

A scenario file pins down everything a closed-loop run needs: the road, the
speed profile the virtual target follows, the ego initial condition, the lead
vehicle's acceleration schedule, obstacles with piecewise-constant velocity
schedules, and every parameter block. Files carry a schema_version field so
old files fail loudly instead of silently drifting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .cbf import AccCbfParams
from .collision_cone import C3bfParams, Obstacle
from .governor import TsgSettings
from .mpc import MpcConfig
from .road import Centerline, SpeedProfile, TargetTrajectory, build_centerline
from .vehicle import VehicleParams, VehicleState

SCHEMA_VERSION = 1


class ScenarioInvalid(ValueError):
    """A scenario field failed validation; carries the offending field path."""

    def __init__(self, field_path: str, msg: str) -> None:
        super().__init__(f"{field_path}: {msg}")
        self.field = field_path
        self.msg = msg


def _require(cond: bool, field_path: str, msg: str) -> None:
    if not cond:
        raise ScenarioInvalid(field_path, msg)


def _as_float(value, field_path: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ScenarioInvalid(field_path, f"expected a number, got {value!r}") from None
    _require(math.isfinite(out), field_path, "must be finite")
    return out


def _fill_dataclass(cls, section: dict, field_path: str):
    """Build a parameter dataclass from a mapping, rejecting unknown keys."""
    if section is None:
        return cls()
    _require(isinstance(section, dict), field_path, "expected a mapping")
    known = {f.name for f in dc_fields(cls)}
    kwargs = {}
    for key, value in section.items():
        _require(key in known, f"{field_path}.{key}", "unknown parameter")
        kwargs[key] = _as_float(value, f"{field_path}.{key}")
    return cls(**kwargs)


@dataclass
class VelocitySchedule:
    """Piecewise-constant planar velocity: v(t) = v_k for t in [t_k, t_{k+1})."""

    times: np.ndarray       # (k,)
    velocities: np.ndarray  # (k, 2)

    @classmethod
    def from_pairs(cls, pairs) -> "VelocitySchedule":
        if not pairs:
            return cls(np.array([0.0]), np.zeros((1, 2)))
        arr = np.asarray(pairs, dtype=float)
        order = np.argsort(arr[:, 0], kind="stable")
        return cls(arr[order, 0], arr[order, 1:3])

    def velocity_at(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        if i < 0:
            return np.zeros(2)
        return self.velocities[i].copy()

    def displacement(self, t: float) -> np.ndarray:
        """Exact integral of the velocity over [0, t] (t >= 0)."""
        out = np.zeros(2)
        if t <= self.times[0]:
            return out
        edges = np.concatenate([self.times, [t]])
        for k in range(len(self.times)):
            lo = max(edges[k], 0.0)
            hi = min(edges[k + 1], t)
            if hi > lo:
                out += (hi - lo) * self.velocities[k]
        return out


@dataclass
class ObstacleSpec:
    x: float
    y: float
    radius: float
    schedule: VelocitySchedule = field(default_factory=lambda: VelocitySchedule.from_pairs([]))

    def at_time(self, t: float) -> Obstacle:
        """Obstacle snapshot: exact position plus the current phase velocity."""
        pos = np.array([self.x, self.y]) + self.schedule.displacement(t)
        vel = self.schedule.velocity_at(t)
        return Obstacle(float(pos[0]), float(pos[1]), float(vel[0]), float(vel[1]), self.radius)


@dataclass
class LeadSpec:
    s0: float
    v0: float
    accel_pairs: list = field(default_factory=list)  # [t, a] rows, piecewise constant


@dataclass
class Scenario:
    name: str
    duration: float
    waypoints: np.ndarray
    speed: SpeedProfile
    ego_s0: float = 0.0
    ego_v0: float = 0.0
    ego_pose: tuple | None = None      # optional explicit (x, y, psi) start
    lead: LeadSpec | None = None
    obstacles: list[ObstacleSpec] = field(default_factory=list)
    governor_enabled: bool = True
    seed: int = 0
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    acc: AccCbfParams = field(default_factory=AccCbfParams)
    cone: C3bfParams = field(default_factory=C3bfParams)
    tsg: TsgSettings = field(default_factory=TsgSettings)

    # ------------------------------------------------------------- loading

    @classmethod
    def from_yaml(cls, path) -> "Scenario":
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ScenarioInvalid("<file>", f"not parseable YAML: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        _require(isinstance(data, dict), "<root>", "scenario must be a mapping")
        version = data.get("schema_version")
        _require(version == SCHEMA_VERSION, "schema_version",
                 f"expected {SCHEMA_VERSION}, got {version!r}")
        _require("name" in data, "name", "required")
        _require("duration" in data, "duration", "required")
        _require("road" in data, "road", "required")
        _require("ego" in data, "ego", "required")

        road = data["road"]
        _require(isinstance(road, dict), "road", "expected a mapping")
        _require("waypoints" in road, "road.waypoints", "required")
        try:
            waypoints = np.asarray(road["waypoints"], dtype=float)
        except (TypeError, ValueError):
            raise ScenarioInvalid("road.waypoints", "expected rows of [x, y]") from None
        _require(waypoints.ndim == 2 and waypoints.shape[1] == 2,
                 "road.waypoints", "expected rows of [x, y]")

        speed_sec = road.get("speed", {})
        _require(isinstance(speed_sec, dict), "road.speed", "expected a mapping")
        if "points" in speed_sec:
            pts = np.asarray(speed_sec["points"], dtype=float)
            _require(pts.ndim == 2 and pts.shape[1] == 2 and len(pts) >= 1,
                     "road.speed.points", "expected rows of [s, v]")
            _require(bool(np.all(np.diff(pts[:, 0]) > 0)),
                     "road.speed.points", "arc lengths must be strictly increasing")
            speed = SpeedProfile(pts[:, 0], pts[:, 1])
        else:
            v = _as_float(speed_sec.get("constant", 0.0), "road.speed.constant")
            speed = SpeedProfile.constant(v)

        ego = data["ego"]
        _require(isinstance(ego, dict), "ego", "expected a mapping")
        ego_pose = None
        if "x" in ego or "y" in ego or "psi" in ego:
            for key in ("x", "y", "psi"):
                _require(key in ego, f"ego.{key}", "explicit pose needs x, y and psi")
            ego_pose = (_as_float(ego["x"], "ego.x"),
                        _as_float(ego["y"], "ego.y"),
                        _as_float(ego["psi"], "ego.psi"))
        ego_s0 = _as_float(ego.get("s0", 0.0), "ego.s0")
        ego_v0 = _as_float(ego.get("v0", 0.0), "ego.v0")

        lead = None
        if data.get("lead") is not None:
            lsec = data["lead"]
            _require(isinstance(lsec, dict), "lead", "expected a mapping")
            pairs = lsec.get("accel", [])
            _require(isinstance(pairs, list), "lead.accel", "expected [t, a] rows")
            for i, row in enumerate(pairs):
                _require(isinstance(row, (list, tuple)) and len(row) == 2,
                         f"lead.accel[{i}]", "expected a [t, a] pair")
            lead = LeadSpec(
                s0=_as_float(lsec.get("s0", 0.0), "lead.s0"),
                v0=_as_float(lsec.get("v0", 0.0), "lead.v0"),
                accel_pairs=[[_as_float(r[0], f"lead.accel[{i}][0]"),
                              _as_float(r[1], f"lead.accel[{i}][1]")]
                             for i, r in enumerate(pairs)],
            )

        obstacles = []
        for i, osec in enumerate(data.get("obstacles") or []):
            path = f"obstacles[{i}]"
            _require(isinstance(osec, dict), path, "expected a mapping")
            vel_pairs = osec.get("velocity", [])
            _require(isinstance(vel_pairs, list), f"{path}.velocity",
                     "expected [t, vx, vy] rows")
            for j, row in enumerate(vel_pairs):
                _require(isinstance(row, (list, tuple)) and len(row) == 3,
                         f"{path}.velocity[{j}]", "expected a [t, vx, vy] row")
            obstacles.append(ObstacleSpec(
                x=_as_float(osec.get("x"), f"{path}.x"),
                y=_as_float(osec.get("y"), f"{path}.y"),
                radius=_as_float(osec.get("radius"), f"{path}.radius"),
                schedule=VelocitySchedule.from_pairs(
                    [[_as_float(v, f"{path}.velocity[{j}][{k}]") for k, v in enumerate(row)]
                     for j, row in enumerate(vel_pairs)]),
            ))

        mpc_sec = data.get("controller")
        mpc = MpcConfig()
        if mpc_sec is not None:
            _require(isinstance(mpc_sec, dict), "controller", "expected a mapping")
            kwargs = {}
            for key, value in mpc_sec.items():
                path = f"controller.{key}"
                if key in ("q", "r", "p"):
                    arr = np.asarray(value, dtype=float)
                    kwargs[key] = np.diag(arr) if arr.ndim == 1 else arr
                elif key == "horizon":
                    kwargs[key] = int(value)
                elif key in ("dt", "slack_weight", "a_rate", "delta_rate"):
                    kwargs[key] = _as_float(value, path)
                else:
                    raise ScenarioInvalid(path, "unknown parameter")
            mpc = MpcConfig(**kwargs)

        tsg_sec = data.get("governor")
        tsg = TsgSettings()
        if tsg_sec is not None:
            _require(isinstance(tsg_sec, dict), "governor", "expected a mapping")
            kwargs = {}
            for key, value in tsg_sec.items():
                path = f"governor.{key}"
                if key in ("max_bisections", "horizon"):
                    kwargs[key] = int(value)
                elif key in ("t_sh_min", "bisection_tol", "update_period", "safety_margin"):
                    kwargs[key] = _as_float(value, path)
                else:
                    raise ScenarioInvalid(path, "unknown parameter")
            tsg = TsgSettings(**kwargs)

        scenario = cls(
            name=str(data["name"]),
            duration=_as_float(data["duration"], "duration"),
            waypoints=waypoints,
            speed=speed,
            ego_s0=ego_s0,
            ego_v0=ego_v0,
            ego_pose=ego_pose,
            lead=lead,
            obstacles=obstacles,
            governor_enabled=bool(data.get("governor_enabled", True)),
            seed=int(data.get("seed", 0)),
            vehicle=_fill_dataclass(VehicleParams, data.get("vehicle"), "vehicle"),
            mpc=mpc,
            acc=_fill_dataclass(AccCbfParams, data.get("acc_cbf"), "acc_cbf"),
            cone=_fill_dataclass(C3bfParams, data.get("collision_cone"), "collision_cone"),
            tsg=tsg,
        )
        scenario.validate()
        return scenario

    # ---------------------------------------------------------- validation

    def validate(self) -> None:
        _require(bool(self.name), "name", "must be nonempty")
        _require(self.duration > 0.0, "duration", "must be positive")
        _require(len(self.waypoints) >= 2, "road.waypoints", "need at least two points")
        for label, params in (("vehicle", self.vehicle), ("controller", self.mpc),
                              ("acc_cbf", self.acc), ("collision_cone", self.cone),
                              ("governor", self.tsg)):
            try:
                params.validate()
            except ValueError as exc:
                raise ScenarioInvalid(label, str(exc)) from exc
        _require(self.ego_v0 >= 0.0, "ego.v0", "must be nonnegative")
        _require(self.ego_v0 <= self.vehicle.v_max, "ego.v0", "exceeds v_max")
        _require(self.ego_s0 >= 0.0, "ego.s0", "must be nonnegative")
        if self.lead is not None:
            _require(self.lead.v0 >= 0.0, "lead.v0", "must be nonnegative")
            times = [p[0] for p in self.lead.accel_pairs]
            _require(times == sorted(times), "lead.accel", "times must be ascending")
            _require(all(0.0 <= t <= self.duration for t in times),
                     "lead.accel", "times must lie within [0, duration]")
        for i, o in enumerate(self.obstacles):
            _require(o.radius > 0.0, f"obstacles[{i}].radius", "must be positive")
            times = o.schedule.times
            _require(bool(np.all(np.diff(times) >= 0.0)),
                     f"obstacles[{i}].velocity", "times must be ascending")
            _require(bool(np.all((times >= 0.0) & (times <= self.duration))),
                     f"obstacles[{i}].velocity", "times must lie within [0, duration]")
        n_steps = self.duration / self.mpc.dt
        _require(abs(n_steps - round(n_steps)) < 1e-9, "duration",
                 "must be an integer multiple of controller dt")

    # ------------------------------------------------------------ builders

    def centerline(self) -> Centerline:
        try:
            return build_centerline(self.waypoints)
        except ValueError as exc:
            raise ScenarioInvalid("road.waypoints", str(exc)) from exc

    def initial_state(self, centerline: Centerline) -> VehicleState:
        if self.ego_pose is not None:
            x, y, psi = self.ego_pose
            return VehicleState(x, y, psi, self.ego_v0)
        p = centerline.point_at(self.ego_s0)
        return VehicleState(float(p[0]), float(p[1]),
                            centerline.heading_at(self.ego_s0), self.ego_v0)

    def reference_trajectory(self, centerline: Centerline, n_samples: int) -> TargetTrajectory:
        """Virtual target marching along the centerline at the speed profile.

        Integrates ds/dt = v(s) with midpoint substeps (exact for a constant
        profile); the targets sit on the centerline with its heading.
        """
        dt = self.mpc.dt
        s = float(self.ego_s0)
        states = np.empty((n_samples, 4))
        sub = 8
        h = dt / sub
        for k in range(n_samples):
            v = max(self.speed(s), 0.0)
            p = centerline.point_at(s)
            states[k] = (p[0], p[1], centerline.heading_at(s), v)
            for _ in range(sub):
                v_mid = max(self.speed(s + 0.5 * h * v), 0.0)
                s = min(s + h * v_mid, centerline.length)
        return TargetTrajectory(t0=0.0, dt=dt, states=states)


def bundled_names() -> list[str]:
    """Names of the scenario files shipped inside the package."""
    root = resources.files("shiftgov") / "scenarios"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir()
                  if p.name.endswith(".yaml"))


def load_bundled(name: str) -> Scenario:
    root = resources.files("shiftgov") / "scenarios"
    path = root / f"{name}.yaml"
    if not path.is_file():
        raise ScenarioInvalid("name", f"no bundled scenario named {name!r}")
    return Scenario.from_dict(yaml.safe_load(path.read_text()))
