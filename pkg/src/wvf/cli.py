"""Command line entry point: ``wvf <subcommand> --config <path> ...``.

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError
from .expr import ExpressionError
from .harness import StageError, run_experiment

SUBCOMMANDS = {
    "run": None,
    "learn": ["learn"],
    "oracle": ["oracle"],
    "eval": ["eval"],
    "infer-dynamics": ["infer"],
    "zero-shot": ["zero_shot"],
    "compose": ["compose"],
    "render": ["render"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wvf", description="World value function experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, help="run a single seed instead of run.seeds")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        if name not in ("run", "learn", "oracle", "compose"):
            p.add_argument("--table", help="saved WVFTBL file to use instead of learning")
        if name == "compose":
            p.add_argument("--expr", action="append", help="boolean expression, e.g. 'blue | square'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    exprs = [(e, e) for e in args.expr] if getattr(args, "expr", None) else None
    try:
        out = run_experiment(args.config, seed=args.seed, out=args.out, stages=SUBCOMMANDS[args.command],
                             table_path=getattr(args, "table", None), exprs=exprs)
    except (ConfigError, ExpressionError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
