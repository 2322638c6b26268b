"""Poke the two barrier functions directly, no simulation involved.

The headway barrier h_acc reads the along-path gap to a lead off the road
geometry; the collision cone barrier reads relative velocity against the
tangent cone of a disc obstacle. Both are plain functions of states, so the
quickest way to build intuition is to sweep them and watch the signs.
"""

import numpy as np

from shiftgov import (
    AccCbfParams,
    C3bfParams,
    Obstacle,
    VehicleState,
    build_centerline,
    collision_cone_h,
    cone_half_angle,
    h_acc,
)


def headway_sweep():
    print("headway barrier on an S-curve, lead fixed at s = 80 m")
    amp, wav = 8.0, 120.0
    xs = np.linspace(0.0, 240.0, 25)
    cl = build_centerline(np.column_stack([xs, amp * np.sin(2 * np.pi * xs / wav)]))
    params = AccCbfParams()  # T = 1 s, D0 = 5 m

    print(f"  {'ego s':>6} {'v':>5} {'h_acc':>8}  meaning")
    for s_ego, v in [(20.0, 8.0), (50.0, 8.0), (50.0, 15.0), (70.0, 8.0), (74.0, 1.0)]:
        p = cl.point_at(s_ego)
        ego = VehicleState(float(p[0]), float(p[1]), cl.heading_at(s_ego), v)
        h = h_acc(ego, 80.0, params, cl).value
        tag = "safe" if h > 0 else "inside the headway envelope"
        print(f"  {s_ego:6.1f} {v:5.1f} {h:8.2f}  {tag}")
    print()


def cone_sweep():
    print("collision cone vs approach bearing, obstacle disc r = 2 m at 25 m")
    params = C3bfParams()
    obs = Obstacle(25.0, 0.0, 0.0, 0.0, 2.0)
    half = np.degrees(cone_half_angle(25.0, 2.0))
    print(f"  tangent cone half-angle at this range: {half:.1f} deg")

    print(f"  {'heading':>8} {'h':>9}  membership")
    for deg in (0.0, 2.0, 4.0, 5.0, 8.0, 20.0):
        ego = VehicleState(0.0, 0.0, np.radians(deg), 10.0)
        h = collision_cone_h(ego, obs, params).value
        verdict = "collision course" if h < 0 else "clears the disc"
        print(f"  {deg:7.1f}d {h:9.2f}  {verdict}")
    print()

    # the barrier also clears when the obstacle outruns the ego
    chase = Obstacle(25.0, 0.0, 14.0, 0.0, 2.0)
    ego = VehicleState(0.0, 0.0, 0.0, 10.0)
    print(f"  receding obstacle, dead ahead: h = "
          f"{collision_cone_h(ego, chase, params).value:+.2f} (safe)")


def main():
    headway_sweep()
    cone_sweep()


if __name__ == "__main__":
    main()
