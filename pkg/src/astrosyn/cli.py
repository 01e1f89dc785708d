"""Command-line entry point.

    astrosyn run <config.yaml> [--scenario NAME] [--seed N] [--out DIR]
                 [--set key.path=value ...]
    astrosyn presets list
    astrosyn validate <config.yaml>

Exit codes: 0 success, 2 configuration error, 3 integration failure.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .config import ConfigError, ExperimentConfig, apply_set_override
from .experiments import PRESETS, run_experiment
from .integrate import IntegrationError


def _build_parser():
    parser = argparse.ArgumentParser(prog="astrosyn",
                                     description="tripartite-synapse simulation runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("config", help="YAML experiment file")
    run_p.add_argument("--scenario", help="override the scenario name")
    run_p.add_argument("--seed", type=int, help="override the top-level seed")
    run_p.add_argument("--out", help="override the output directory")
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a nested config value")

    presets_p = sub.add_parser("presets", help="inspect the named presets")
    presets_p.add_argument("action", choices=["list"])

    val_p = sub.add_parser("validate", help="check a config file without running")
    val_p.add_argument("config", help="YAML experiment file")
    return parser


def _load_raw(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed YAML: {err}") from err
    return data or {}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            width = max(len(name) for name in PRESETS)
            for name, desc in PRESETS.items():
                print(f"{name:<{width}}  {desc}")
            return 0
        if args.command == "validate":
            ExperimentConfig.from_dict(_load_raw(args.config))
            print(f"{args.config}: OK")
            return 0
        # run: precedence is file < --set < dedicated flags
        data = _load_raw(args.config)
        for assignment in args.overrides:
            apply_set_override(data, assignment)
        if args.scenario is not None:
            data["scenario"] = args.scenario
        if args.seed is not None:
            data["seed"] = args.seed
        if args.out is not None:
            data["output_dir"] = args.out
        config = ExperimentConfig.from_dict(data)
        written = run_experiment(config)
        for path in written:
            print(path)
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except IntegrationError as err:
        print(f"integration failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
