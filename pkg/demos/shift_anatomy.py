"""Dissect one governor update: which candidate shifts are admissible and why.

update_shift is a search over candidate shifts; each candidate is judged by
honestly simulating the closed loop forward and demanding every barrier stay
above the safety margin with no slack firing. This script replays that search
by hand on the tsg_boundary scenario (a parked lead placed so that the zero
shift has just gone inadmissible) and then lets update_shift answer.
"""

import numpy as np

from shiftgov import (
    Controller,
    ControllerMemory,
    TsgState,
    VehicleState,
    is_admissible,
    load_bundled,
    update_shift,
)


def main():
    sc = load_bundled("tsg_boundary")
    cl = sc.centerline()
    controller = Controller(sc.vehicle, cl, sc.acc, sc.cone, sc.mpc)

    n_pad = sc.tsg.horizon + sc.mpc.horizon + 2
    traj = sc.reference_trajectory(cl, round(sc.duration / sc.mpc.dt) + n_pad)
    x0 = sc.initial_state(cl)

    lead_s = sc.lead.s0
    p = cl.point_at(lead_s)
    lead = VehicleState(float(p[0]), float(p[1]), cl.heading_at(lead_s), sc.lead.v0)

    print(f"parked lead at s = {lead_s:.0f} m, ego at {x0.v:.0f} m/s,")
    print(f"safety margin {sc.tsg.safety_margin} m, "
          f"look-ahead {sc.tsg.horizon} steps\n")

    print("candidate shift -> admissible? (each probe is a fresh forward sim)")
    for t_sh in np.arange(0.0, -2.01, -0.25):
        ok = is_admissible(controller, x0, 0.0, float(t_sh), traj, lead, [],
                           sc.tsg, ControllerMemory())
        bar = "#" * int(8 * min(1.0, -t_sh / 2.0))
        print(f"  t_sh = {t_sh:6.2f} s  {'yes' if ok else 'NO ':<3} {bar}")

    new = update_shift(TsgState(), controller, x0, 0.0, traj, lead, [],
                       sc.tsg, ControllerMemory())
    print(f"\nupdate_shift bisected to t_sh = {new.t_sh:.4f} s "
          f"(resolution {sc.tsg.bisection_tol} s, saturated={new.saturated})")
    print("the governor holds the least retiming that keeps the look-ahead clean")


if __name__ == "__main__":
    main()
