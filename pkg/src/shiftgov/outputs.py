"""File emission for simulation runs: log.csv, metrics.json, SVG plots.

log.csv column order is part of the toolkit's contract:

    t, x, y, psi, v, a, delta, lead_x, lead_y, lead_v, t_sh, h_acc,
    h_obs_0..h_obs_{K-1}, slack_acc, slack_obs_0..slack_obs_{K-1}

Floats are written with repr, the shortest digits that round-trip, which
makes equal runs byte-identical files. Plots are stripped of timestamps and
use a fixed hash salt for the same reason.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .simulation import Metrics, SimLog  # noqa: E402

_SVG_SETTINGS = {"svg.fonttype": "none", "svg.hashsalt": "shiftgov"}


def _csv_text(log: SimLog) -> str:
    k_obs = log.n_obstacles
    header = ["t", "x", "y", "psi", "v", "a", "delta",
              "lead_x", "lead_y", "lead_v", "t_sh", "h_acc"]
    header += [f"h_obs_{i}" for i in range(k_obs)]
    header += ["slack_acc"]
    header += [f"slack_obs_{i}" for i in range(k_obs)]

    lines = [",".join(header)]
    for k in range(len(log.t)):
        row = [log.t[k], log.ego[k, 0], log.ego[k, 1], log.ego[k, 2], log.ego[k, 3],
               log.inputs[k, 0], log.inputs[k, 1],
               log.lead[k, 0], log.lead[k, 1], log.lead[k, 2],
               log.t_sh[k], log.h_acc[k]]
        row += [log.h_obs[k, i] for i in range(k_obs)]
        row += [log.slack_acc[k]]
        row += [log.slack_obs[k, i] for i in range(k_obs)]
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_trajectory(log: SimLog, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.plot(log.ego[:, 0], log.ego[:, 1], label="ego", lw=1.5)
    if not np.isnan(log.lead[:, 0]).all():
        ax.plot(log.lead[:, 0], log.lead[:, 1], "--", label="lead", lw=1.2)
    for i in range(log.n_obstacles):
        ax.plot(log.obstacles[:, i, 0], log.obstacles[:, i, 1], ":", lw=1.0,
                label=f"obstacle {i}")
        last = log.obstacles[-1, i]
        ax.add_patch(plt.Circle((last[0], last[1]), last[4], fill=False,
                                color="crimson", lw=0.8))
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, lw=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def _plot_barriers(log: SimLog, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    if not np.isnan(log.h_acc).all():
        ax.plot(log.t, log.h_acc, label="h_acc", lw=1.2)
    for i in range(log.n_obstacles):
        ax.plot(log.t, log.h_obs[:, i], label=f"h_obs_{i}", lw=1.0)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("barrier value")
    ax.grid(True, lw=0.3)
    if ax.get_legend_handles_labels()[1]:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def _plot_shift(log: SimLog, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 2.8))
    ax.step(log.t, log.t_sh, where="post", lw=1.2)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("t_sh [s]")
    ax.grid(True, lw=0.3)
    fig.tight_layout()
    _save(fig, path)


def _plot_speed(log: SimLog, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.plot(log.t, log.ego[:, 3], label="ego v", lw=1.2)
    if not np.isnan(log.lead[:, 2]).all():
        ax.plot(log.t, log.lead[:, 2], "--", label="lead v", lw=1.2)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("speed [m/s]")
    ax.grid(True, lw=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def emit_outputs(log: SimLog, metrics: Metrics, out_dir) -> dict[str, str]:
    """Write all run artifacts into out_dir; returns a name -> path manifest.

    Raises OSError when the directory or any file cannot be written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    (out / "log.csv").write_text(_csv_text(log))
    (out / "metrics.json").write_text(metrics.to_json())

    with plt.rc_context(_SVG_SETTINGS):
        _plot_trajectory(log, out / "trajectory.svg")
        _plot_barriers(log, out / "barriers.svg")
        _plot_shift(log, out / "shift.svg")
        _plot_speed(log, out / "speed.svg")

    names = ["log.csv", "metrics.json", "trajectory.svg", "barriers.svg",
             "shift.svg", "speed.svg"]
    return {name: str(out / name) for name in names}
