"""Command line entry point: ``cocyclelab <command> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 step cap or search budget
exceeded, 4 a structural invariant failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import CapExceeded, ClassSearchTimeout, ConfigError, InvariantViolation
from .experiments import COMMANDS, SCENARIOS, ExperimentConfig, run, write_report


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cocyclelab",
                                 description="Cocycle experiments over the Bernoulli shift.")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=f"scenarios: {', '.join(SCENARIOS[cmd])}")
        sp.add_argument("--config", help="JSON file with parameter values")
        sp.add_argument("--scenario", choices=SCENARIOS[cmd])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"))
        sp.add_argument("--out", help="output path (a .summary.json sidecar is added)")
        sp.add_argument("--cap", type=int, help="step cap for return-time searches")
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--eta", type=float)
        sp.add_argument("--etas", type=_floats, help="comma-separated eta grid")
        sp.add_argument("--p", type=float)
        sp.add_argument("--rho", type=float)
        sp.add_argument("--k", type=_ints, help="comma-separated k grid")
        sp.add_argument("--beta", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--alphas", type=_floats)
        sp.add_argument("--n", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--j-max", dest="j_max", type=int)
    return ap


def config_from_args(args) -> ExperimentConfig:
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
        if "format" in values:
            values["fmt"] = values.pop("format")
    for key, val in vars(args).items():
        if key not in ("config", "command") and val is not None:
            values[key] = val
    values["command"] = args.command
    try:
        return ExperimentConfig(**values).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        rep = run(cfg)
        write_report(rep, cfg, sys.stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CapExceeded, ClassSearchTimeout) as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
