"""Command-line entry point.

    fa-lab train   --config cfg.json [--seed S] [--threads N] --out DIR
    fa-lab sweep   --config cfg.json [--seed S] [--threads N] --out DIR
    fa-lab verify  --config cfg.json [--suite NAME] [--seed S] --out DIR
    fa-lab gen-data --config cfg.json [--seed S] --out DIR

Exit codes: 0 success, 1 config/usage error, 2 verification failure (or a
diverged run), 3 IO error.
"""

import argparse
import dataclasses
import os
import sys

from .config import load_config
from .errors import ContractViolation, DatasetFormatError, DivergenceError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_IO = 3


def _parser():
    parser = argparse.ArgumentParser(
        prog="fa-lab",
        description="Two-layer network lab: backprop vs (regularized) "
                    "feedback alignment.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, extra in (("train", ()), ("sweep", ()),
                        ("verify", ("suite",)), ("gen-data", ())):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON config path")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        cmd.add_argument("--threads", type=int,
                         default=max(os.cpu_count() or 1, 1),
                         help="worker process bound for sweeps/verification")
        cmd.add_argument("--out", required=True, help="output directory")
        if "suite" in extra:
            cmd.add_argument("--suite", default="all",
                             help="concentration|isometry|gram|dynamics|"
                                  "contraction|alignment|all")
    return parser


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
    except (OSError,) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from . import experiments

    try:
        if args.command == "train":
            _, summary, path = experiments.run_single(config, args.out)
            print(f"run complete: final err {summary.final_err_norm:.6g}, "
                  f"final cos {summary.final_cos_align:.6g} -> {path}")
        elif args.command == "sweep":
            summaries, path = experiments.run_sweep(
                config, args.out, threads=args.threads)
            print(f"sweep complete: {len(summaries)} cells -> {path}")
            if any(s["diverged_repeats"] for s in summaries):
                return EXIT_VERIFY
        elif args.command == "verify":
            results, ok = experiments.run_verify(
                args.suite, config, args.out, threads=args.threads)
            for r in results:
                print(r.line())
            if not ok:
                return EXIT_VERIFY
        elif args.command == "gen-data":
            experiments.gen_data_cmd(config, args.out)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetFormatError as exc:
        print(f"error: {exc} (line {exc.line})", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
