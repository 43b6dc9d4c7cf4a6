"""Command-line entry point for the experiment harness.

Subcommands: forward-test, synthesize, reconstruct, experiment.  Every
failure exits nonzero with a one-line machine-parseable message on stderr.
"""

import argparse
import json
import sys

from . import experiments as exp
from ._parallel import default_workers

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platewave",
        description="Flexural-wave scattering and sampling-method reconstruction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_config):
        if need_config:
            p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="noise seed override")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default $PLATEWAVE_WORKERS or 1)")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("forward-test", help="analytic point-source accuracy test")
    common(p, need_config=True)
    p.add_argument("--gate", action="store_true",
                   help="exit nonzero when the error exceeds the config threshold")

    p = sub.add_parser("synthesize", help="compute and store a far-field matrix")
    common(p, need_config=True)

    p = sub.add_parser("reconstruct", help="run sampling methods on a stored matrix")
    common(p, need_config=True)
    p.add_argument("--matrix", required=True, help="BHFF far-field matrix file")

    p = sub.add_parser("experiment", help="run a canned desk-scale experiment")
    p.add_argument("name", choices=exp.preset_names())
    common(p, need_config=False)
    return parser


def _load_config(path: str) -> exp.ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    return exp.config_from_dict(data)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    workers = args.workers if args.workers is not None else default_workers()
    try:
        if args.command == "forward-test":
            cfg = _load_config(args.config)
            result = exp.cmd_forward_test(cfg, out_dir=args.out)
            if args.gate and result["relative_error"] > cfg.gate_threshold:
                print(
                    f"error: gate: relative error {result['relative_error']:.3e} "
                    f"exceeds {cfg.gate_threshold:.3e}",
                    file=sys.stderr,
                )
                return 1
        elif args.command == "synthesize":
            cfg = _load_config(args.config)
            out = exp.cmd_synthesize(cfg, args.out, seed=args.seed, workers=workers)
            print(out["run_dir"])
        elif args.command == "reconstruct":
            cfg = _load_config(args.config)
            out = exp.cmd_reconstruct(cfg, args.matrix, args.out, workers=workers)
            print(out["run_dir"])
        elif args.command == "experiment":
            for run in exp.cmd_experiment(args.name, args.out, seed=args.seed,
                                          workers=workers):
                print(f"{run['label']}: {run['run_dir']}")
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
