"""Command-line entry point: ``crackinv <command> --config FILE [options]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import COMMANDS, ConfigError, ExperimentConfig, SolverFailure, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_HELP = {
    "forward": "solve the forward problem and write the far-field pattern",
    "make-data": "write clean and noisy synthetic far-field data",
    "contrast": "evaluate a contrast sampling indicator on a grid",
    "factorize": "one-wave factorization indicator against test disks or external matrices",
    "scan-hull": "radius scans around many centers and the support count field",
    "newton": "regularized Newton reconstruction of the crack corners",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crackinv", description="Direct and inverse scattering by sound-soft cracks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        p.add_argument("--config", required=True, type=Path, help="experiment JSON file")
        p.add_argument("--seed", type=int, default=None, help="override the noise seed")
        p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory (default: out)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for grid scans (default: 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed", "must be nonnegative")
        config = ExperimentConfig.load(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        result = run_experiment(config, args.out_dir, args.command, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc} (partial outputs in {args.out_dir})", file=sys.stderr)
        return EXIT_SOLVER
    for name in result.artifacts:
        print(result.out_dir / name)
    print(result.out_dir / "run.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
