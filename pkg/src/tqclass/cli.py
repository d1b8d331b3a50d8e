"""Command-line entry point for the reproduction experiments.

A run is described by a ``RunConfig``: either loaded from a JSON file
(``--config``) or assembled from flags, with flags overriding file values.
Exit codes: 0 success, 2 invalid configuration, 3 deviation from the
reference bands under ``--strict``, 1 internal failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import WorkbenchError, ValidationError
from .experiments import EXPERIMENTS, RunConfig, run

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DEVIATION = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tqclass",
        description="Trainable quantum feature maps, kernel SVMs, and "
        "Grover-amplified readout experiments.",
    )
    parser.add_argument("--config", help="JSON file with a RunConfig")
    parser.add_argument("--experiment", choices=EXPERIMENTS)
    parser.add_argument(
        "--seed", type=int, action="append", dest="seeds",
        help="random seed; repeat the flag for multi-seed experiments",
    )
    parser.add_argument(
        "--layers", default=None,
        help="re-uploading depth r, or 'all' to sweep r in {0,1,2}",
    )
    parser.add_argument("--rotation", choices=("Y", "ZYZ"))
    parser.add_argument("--shots", type=int)
    parser.add_argument("--budget", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--c-penalty", type=float, dest="c_penalty")
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--kernel-power", type=int, dest="kernel_power")
    parser.add_argument("--out", dest="out_dir")
    parser.add_argument("--dataset", dest="dataset_path")
    parser.add_argument(
        "--strict", action="store_true", default=None,
        help="exit 3 when any reference band is missed",
    )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"config: {exc}") from exc
    for name in (
        "experiment", "seeds", "rotation", "shots", "budget", "gamma",
        "c_penalty", "threshold", "iterations", "kernel_power", "out_dir",
        "dataset_path", "strict",
    ):
        value = getattr(args, name)
        if value is not None:
            values[name] = value
    if args.layers is not None:
        values["layers"] = None if args.layers == "all" else int(args.layers)
    if "experiment" not in values:
        raise ValidationError("experiment: required (flag or config file)")
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def _print_summary(result: dict) -> None:
    print(f"experiment: {result['experiment']}")
    for key, value in result["summary"].items():
        if isinstance(value, float):
            print(f"  {key}: {value:.4g}")
        else:
            print(f"  {key}: {value}")
    for name, digest in result["files"].items():
        print(f"  wrote {name} sha256={digest[:12]}")
    if result["deviation"]:
        print("  deviation: outside reference bands")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValidationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run(config)
    except WorkbenchError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    _print_summary(result)
    if config.strict and result["deviation"]:
        return EXIT_DEVIATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
