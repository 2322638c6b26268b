"""Road centerline geometry and time-parametrized target trajectories.

The centerline is a Catmull-Rom style cubic through the scenario waypoints,
chord-length parametrized, with arc length accumulated by 16-point
Gauss-Legendre quadrature per segment. All public queries take arc length s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .vehicle import VehicleState, wrap_angle

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class DuplicateWaypointError(ValueError):
    """Raised when consecutive waypoints coincide (within 1e-9 m)."""


@dataclass
class RoadFrame:
    """Local centerline geometry at one arc length."""

    point: np.ndarray
    tangent: np.ndarray
    heading: float
    curvature: float


class Centerline:
    """Cubic centerline through waypoints, queried by arc length."""

    def __init__(self, waypoints) -> None:
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("waypoints must be an (n, 2) array with n >= 2")
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(chords < 1e-9):
            raise DuplicateWaypointError("consecutive waypoints closer than 1e-9 m")

        t = np.concatenate([[0.0], np.cumsum(chords)])
        tangents = np.empty_like(pts)
        tangents[0] = (pts[1] - pts[0]) / (t[1] - t[0])
        tangents[-1] = (pts[-1] - pts[-2]) / (t[-1] - t[-2])
        for i in range(1, len(pts) - 1):
            tangents[i] = (pts[i + 1] - pts[i - 1]) / (t[i + 1] - t[i - 1])

        self._t = t
        self._spline = CubicHermiteSpline(t, pts, tangents, axis=0)
        self._d1 = self._spline.derivative()
        self._d2 = self._d1.derivative()

        # cumulative arc length at segment boundaries
        seg = np.array([
            self._quad_length(t[i], t[i + 1]) for i in range(len(pts) - 1)
        ])
        self._s = np.concatenate([[0.0], np.cumsum(seg)])

        # coarse samples used to seed projections and the s -> t inversion
        n_dense = max(int(np.ceil(self._s[-1] / 0.5)), 4 * (len(pts) - 1))
        self._dense_t = np.linspace(t[0], t[-1], n_dense + 1)
        self._dense_xy = self._spline(self._dense_t)
        gaps = np.array([
            self._quad_length(self._dense_t[i], self._dense_t[i + 1])
            for i in range(n_dense)
        ])
        self._dense_s = np.concatenate([[0.0], np.cumsum(gaps)])

    @property
    def length(self) -> float:
        return float(self._s[-1])

    @property
    def arclength_table(self) -> np.ndarray:
        """Cumulative arc length at waypoint parameters (read-only copy)."""
        return self._s.copy()

    def _speed(self, t):
        d = self._d1(t)
        return np.linalg.norm(d, axis=-1)

    def _quad_length(self, t_lo: float, t_hi: float) -> float:
        if t_hi <= t_lo:
            return 0.0
        half = 0.5 * (t_hi - t_lo)
        mid = 0.5 * (t_hi + t_lo)
        return float(half * np.dot(_GL_WEIGHTS, self._speed(mid + half * _GL_NODES)))

    def _param_at(self, s: float) -> float:
        """Invert the arc-length map; s is clamped to [0, length]."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self._s, s, side="right") - 1)
        i = min(i, len(self._s) - 2)
        t_lo, t_hi = self._t[i], self._t[i + 1]
        ds = s - self._s[i]
        lo, hi = t_lo, t_hi
        # Newton on g(t) = len(t_lo, t) - ds with bisection safeguard;
        # g' = |c'(t)| > 0 so the bracket only shrinks. The dense-table seed
        # usually lands within one Newton step of the 1e-12 stop.
        t = min(max(float(np.interp(s, self._dense_s, self._dense_t)), t_lo), t_hi)
        for _ in range(60):
            g = self._quad_length(t_lo, t) - ds
            if abs(g) < 1e-12:
                break
            if g > 0.0:
                hi = t
            else:
                lo = t
            t_new = t - g / max(float(self._speed(t)), 1e-12)
            if not lo <= t_new <= hi:
                t_new = 0.5 * (lo + hi)
            if abs(t_new - t) < 1e-14:
                t = t_new
                break
            t = t_new
        return float(t)

    def _arclength_of_param(self, t: float) -> float:
        i = int(np.searchsorted(self._t, t, side="right") - 1)
        i = min(max(i, 0), len(self._t) - 2)
        return float(self._s[i] + self._quad_length(self._t[i], t))

    def _frame_of_param(self, t: float) -> "RoadFrame":
        c = self._spline(t)
        d1 = self._d1(t)
        d2 = self._d2(t)
        speed = float(np.hypot(d1[0], d1[1]))
        tang = d1 / speed
        kappa = float((d1[0] * d2[1] - d1[1] * d2[0]) / speed**3)
        return RoadFrame(
            point=np.asarray(c, dtype=float),
            tangent=np.asarray(tang, dtype=float),
            heading=float(np.arctan2(d1[1], d1[0])),
            curvature=kappa,
        )

    def frame_at(self, s: float) -> "RoadFrame":
        """Point, unit tangent, heading and curvature in one inversion."""
        return self._frame_of_param(self._param_at(s))

    def point_at(self, s: float) -> np.ndarray:
        return np.asarray(self._spline(self._param_at(s)), dtype=float)

    def tangent_at(self, s: float) -> np.ndarray:
        d = self._d1(self._param_at(s))
        return np.asarray(d / np.linalg.norm(d), dtype=float)

    def heading_at(self, s: float) -> float:
        d = self._d1(self._param_at(s))
        return float(np.arctan2(d[1], d[0]))

    def curvature_at(self, s: float) -> float:
        t = self._param_at(s)
        d1 = self._d1(t)
        d2 = self._d2(t)
        num = d1[0] * d2[1] - d1[1] * d2[0]
        return float(num / np.linalg.norm(d1) ** 3)

    def _project_param(self, point, s_hint: float | None = None) -> float:
        p = np.asarray(point, dtype=float)
        if s_hint is not None:
            t = self._param_at(s_hint)
        else:
            d2 = np.sum((self._dense_xy - p) ** 2, axis=1)
            t = float(self._dense_t[int(np.argmin(d2))])

        t_min, t_max = self._t[0], self._t[-1]
        # Newton on F(t) = (p - c(t)) . c'(t); fall back to golden-ratio-free
        # bisection on the dense bracket if the step escapes
        for _ in range(60):
            c = self._spline(t)
            d1 = self._d1(t)
            d2v = self._d2(t)
            r = p - c
            f = float(np.dot(r, d1))
            fp = float(-np.dot(d1, d1) + np.dot(r, d2v))
            if abs(fp) < 1e-14:
                break
            t_new = min(max(t - f / fp, t_min), t_max)
            if abs(t_new - t) < 1e-13:
                t = t_new
                break
            t = t_new
        # ends win if the stationary point is farther than a clamp
        cand = [t]
        if s_hint is None:
            cand += [t_min, t_max]
        return float(min(cand, key=lambda tt: float(np.sum((p - self._spline(tt)) ** 2))))

    def project(self, point, s_hint: float | None = None) -> float:
        """Arc length of the closest centerline point; clamped at the ends."""
        return self._arclength_of_param(self._project_param(point, s_hint))

    def project_frame(self, point, s_hint: float | None = None) -> tuple[float, "RoadFrame"]:
        """Project and return (s, frame at s) without a second inversion."""
        t = self._project_param(point, s_hint)
        return self._arclength_of_param(t), self._frame_of_param(t)

    def project_frames(self, points, s_hints=None):
        """Vectorized projection of many points in one Newton sweep.

        points: (K, 2). s_hints: (K,) seeds or None for a dense-table search.
        Returns (s, point, tangent, heading, curvature) arrays of length K.
        The per-point results agree with project()/frame_at() to solver
        tolerance; only the seeding differs.
        """
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        k = p.shape[0]
        t_min, t_max = self._t[0], self._t[-1]
        if s_hints is not None:
            t = np.interp(np.asarray(s_hints, dtype=float), self._dense_s, self._dense_t)
        else:
            d2 = np.sum((self._dense_xy[None, :, :] - p[:, None, :]) ** 2, axis=2)
            t = self._dense_t[np.argmin(d2, axis=1)]
        t = np.clip(t, t_min, t_max)

        active = np.ones(k, dtype=bool)
        for _ in range(60):
            c = self._spline(t)
            d1 = self._d1(t)
            d2v = self._d2(t)
            r = p - c
            f = np.sum(r * d1, axis=1)
            fp = -np.sum(d1 * d1, axis=1) + np.sum(r * d2v, axis=1)
            safe = np.abs(fp) >= 1e-14
            t_new = np.where(active & safe, np.clip(t - f / np.where(safe, fp, 1.0), t_min, t_max), t)
            moved = np.abs(t_new - t) >= 1e-13
            t = t_new
            active = active & safe & moved
            if not np.any(active):
                break

        if s_hints is None:
            d_best = np.sum((p - self._spline(t)) ** 2, axis=1)
            for t_end in (t_min, t_max):
                d_end = np.sum((p - self._spline(t_end)[None, :]) ** 2, axis=1)
                t = np.where(d_end < d_best, t_end, t)
                d_best = np.minimum(d_best, d_end)

        s = self._arclengths_of_params(t)
        c = np.asarray(self._spline(t), dtype=float)
        d1 = np.asarray(self._d1(t), dtype=float)
        d2v = np.asarray(self._d2(t), dtype=float)
        speed = np.hypot(d1[:, 0], d1[:, 1])
        tang = d1 / speed[:, None]
        curv = (d1[:, 0] * d2v[:, 1] - d1[:, 1] * d2v[:, 0]) / speed**3
        head = np.arctan2(d1[:, 1], d1[:, 0])
        return s, c, tang, head, curv

    def _arclengths_of_params(self, t: np.ndarray) -> np.ndarray:
        i = np.clip(np.searchsorted(self._t, t, side="right") - 1, 0, len(self._t) - 2)
        t_lo = self._t[i]
        half = 0.5 * (t - t_lo)
        mid = 0.5 * (t + t_lo)
        nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        d = self._d1(nodes.ravel())
        speeds = np.hypot(d[:, 0], d[:, 1]).reshape(nodes.shape)
        return self._s[i] + half * (speeds @ _GL_WEIGHTS)

    def lateral_offset(self, point, s: float) -> float:
        """Signed cross-track distance of point at its projection s (left positive)."""
        p = np.asarray(point, dtype=float)
        fr = self.frame_at(s)
        normal = np.array([-fr.tangent[1], fr.tangent[0]])
        return float(np.dot(p - fr.point, normal))


def build_centerline(waypoints) -> Centerline:
    return Centerline(waypoints)


@dataclass
class SpeedProfile:
    """Piecewise-linear speed setpoint over arc length."""

    s_points: np.ndarray
    v_points: np.ndarray

    @classmethod
    def constant(cls, v: float) -> "SpeedProfile":
        return cls(np.array([0.0]), np.array([float(v)]))

    def __call__(self, s: float) -> float:
        return float(np.interp(s, self.s_points, self.v_points))


@dataclass
class ReferencePoint:
    x: float
    y: float
    heading: float
    curvature: float
    speed: float


def sample_reference(centerline: Centerline, s: float, speed_profile: SpeedProfile) -> ReferencePoint:
    fr = centerline.frame_at(s)
    return ReferencePoint(
        x=float(fr.point[0]),
        y=float(fr.point[1]),
        heading=fr.heading,
        curvature=fr.curvature,
        speed=speed_profile(s),
    )


@dataclass
class TargetTrajectory:
    """Target states on a uniform time grid; queries interpolate linearly.

    Heading interpolation goes through the wrapped difference so a trajectory
    crossing the +-pi seam stays continuous. Queries outside the grid clamp to
    the first/last sample.
    """

    t0: float
    dt: float
    states: np.ndarray  # (m, 4) rows of (x, y, psi, v)

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[1] != 4 or len(self.states) < 1:
            raise ValueError("states must be (m, 4) with m >= 1")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self.states) - 1) * self.dt

    def state_at(self, t: float) -> VehicleState:
        tau = (t - self.t0) / self.dt
        if tau <= 0.0:
            return VehicleState.from_array(self.states[0])
        if tau >= len(self.states) - 1:
            return VehicleState.from_array(self.states[-1])
        i = int(tau)
        frac = tau - i
        a, b = self.states[i], self.states[i + 1]
        out = a + frac * (b - a)
        out[2] = wrap_angle(a[2] + frac * wrap_angle(b[2] - a[2]))
        return VehicleState.from_array(out)


def target_state(traj: TargetTrajectory, t: float) -> VehicleState:
    return traj.state_at(t)


def shifted_target(traj: TargetTrajectory, t: float, t_sh: float) -> VehicleState:
    """Target state with the time argument shifted by t_sh (<= 0 delays it)."""
    return traj.state_at(t + t_sh)


@dataclass
class AccelSchedule:
    """Piecewise-constant acceleration over time: a(t) = a_k for t in [t_k, t_{k+1})."""

    times: np.ndarray
    accels: np.ndarray

    @classmethod
    def from_pairs(cls, pairs) -> "AccelSchedule":
        if not pairs:
            return cls(np.array([0.0]), np.array([0.0]))
        arr = np.asarray(pairs, dtype=float)
        order = np.argsort(arr[:, 0], kind="stable")
        return cls(arr[order, 0], arr[order, 1])

    def accel_at(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        if i < 0:
            return 0.0
        return float(self.accels[i])


def _advance(s: float, v: float, a: float, dt: float) -> tuple[float, float]:
    """Exact constant-acceleration advance with the stop at v = 0 honored."""
    if a < 0.0 and v + a * dt < 0.0:
        t_stop = v / -a
        s += v * t_stop + 0.5 * a * t_stop * t_stop
        return s, 0.0
    s += v * dt + 0.5 * a * dt * dt
    return s, v + a * dt


def rollout_schedule(
    centerline: Centerline,
    s0: float,
    v0: float,
    schedule: AccelSchedule,
    t0: float,
    dt: float,
    n_samples: int,
) -> tuple[TargetTrajectory, np.ndarray, np.ndarray]:
    """Roll a point along the centerline under the acceleration schedule.

    Returns the trajectory plus the raw (s, v) arrays on the same grid; speed
    is clamped at zero (a stopped vehicle does not reverse).
    """
    s_arr = np.empty(n_samples)
    v_arr = np.empty(n_samples)
    s, v = float(s0), float(v0)
    for k in range(n_samples):
        s_arr[k] = s
        v_arr[k] = v
        t_lo = t0 + k * dt
        t_hi = t_lo + dt
        # split the step at schedule breakpoints inside (t_lo, t_hi)
        times = schedule.times
        inner = times[(times > t_lo) & (times < t_hi)]
        t_cur = t_lo
        for t_cut in list(inner) + [t_hi]:
            s, v = _advance(s, v, schedule.accel_at(t_cur), t_cut - t_cur)
            t_cur = t_cut

    states = np.empty((n_samples, 4))
    for k in range(n_samples):
        sk = min(s_arr[k], centerline.length)
        fr = centerline.frame_at(sk)
        states[k, 0] = fr.point[0]
        states[k, 1] = fr.point[1]
        states[k, 2] = fr.heading
        states[k, 3] = v_arr[k]
    return TargetTrajectory(t0, dt, states), s_arr, v_arr
