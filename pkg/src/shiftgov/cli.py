"""Command-line entry point.

    shiftgov simulate --scenario s.yaml --out dir [--no-governor] [--seed n]
    shiftgov validate --scenario s.yaml
    shiftgov sweep --scenario s.yaml --param governor.safety_margin \\
        --values 0.0,0.1,0.2 --out dir
    shiftgov --version

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from . import __version__
from .outputs import emit_outputs
from .scenario import Scenario, ScenarioInvalid
from .simulation import run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftgov",
        description="Closed-loop simulator for time-shift-governed MPC with "
                    "control barrier functions.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write artifacts")
    sim.add_argument("--scenario", required=True, help="scenario YAML file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--no-governor", action="store_true",
                     help="disable the time shift governor for this run")
    sim.add_argument("--seed", type=int, default=None,
                     help="override the scenario's random seed")

    val = sub.add_parser("validate", help="check a scenario file and exit")
    val.add_argument("--scenario", required=True, help="scenario YAML file")

    sweep = sub.add_parser("sweep", help="rerun one scenario over parameter values")
    sweep.add_argument("--scenario", required=True, help="scenario YAML file")
    sweep.add_argument("--param", required=True,
                       help="dotted path into the scenario file, e.g. governor.safety_margin")
    sweep.add_argument("--values", required=True,
                       help="comma-separated values to substitute")
    sweep.add_argument("--out", required=True, help="output directory")
    return parser


def _load_raw(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioInvalid("<file>", str(exc)) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioInvalid("<file>", f"not parseable YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioInvalid("<root>", "scenario must be a mapping")
    return data


def _set_dotted(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        nxt = node.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            node[key] = nxt
        node = nxt
    node[keys[-1]] = value


def _cmd_simulate(args) -> int:
    scenario = Scenario.from_dict(_load_raw(args.scenario))
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    log, metrics = run(scenario, governor_enabled=False if args.no_governor else None)
    manifest = emit_outputs(log, metrics, args.out)
    print(f"{scenario.name}: {len(log.t)} records -> {args.out}")
    for key, value in metrics.to_dict().items():
        print(f"  {key}: {value}")
    return 0 if manifest else 2


def _cmd_validate(args) -> int:
    scenario = Scenario.from_dict(_load_raw(args.scenario))
    print(f"{scenario.name}: valid")
    return 0


def _cmd_sweep(args) -> int:
    base = _load_raw(args.scenario)
    try:
        values = [yaml.safe_load(v) for v in args.values.split(",") if v != ""]
    except yaml.YAMLError as exc:
        raise ScenarioInvalid("--values", str(exc)) from exc
    if not values:
        raise ScenarioInvalid("--values", "need at least one value")

    rows = []
    for value in values:
        data = copy.deepcopy(base)
        _set_dotted(data, args.param, value)
        scenario = Scenario.from_dict(data)
        _, metrics = run(scenario)
        rows.append((value, metrics.to_dict()))
        print(f"{args.param}={value}: done")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = list(rows[0][1].keys())
    lines = [",".join([args.param] + keys)]
    for value, md in rows:
        lines.append(",".join([str(value)] + [str(md[k]) for k in keys]))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "validate": _cmd_validate,
                "sweep": _cmd_sweep}
    try:
        return handlers[args.command](args)
    except ScenarioInvalid as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001  (CLI boundary: fold into exit code)
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
