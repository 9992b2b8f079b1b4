"""Command-line interface.

    newsconn generate --config cfg.ini --out data/    [--seed N]
    newsconn run      --config cfg.ini --out results/
    newsconn summarize --in results/

generate draws a synthetic universe from the [synthetic] config section;
run executes the full pipeline per [pipeline]; summarize re-prints the
text summary of a finished run.  Thread count can be set with the
NEWSCONN_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_pipeline_config, load_synthetic_config


def _cmd_generate(args: argparse.Namespace) -> int:
    from .generator import generate_universe, write_universe

    cfg = load_synthetic_config(args.config, seed=args.seed)
    universe = generate_universe(cfg)
    paths = write_universe(universe, args.out)
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    from .pipeline import PipelineStageError, run_pipeline

    cfg = load_pipeline_config(args.config)
    try:
        result = run_pipeline(cfg, args.out)
    except PipelineStageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    for name in sorted(result.files):
        print(f"{name}: {result.files[name]}")
    for note in result.notes:
        print(f"note: {note}")
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    summary = Path(args.in_dir) / "summary.txt"
    if not summary.exists():
        print(f"no summary.txt under {args.in_dir}; run the pipeline first", file=sys.stderr)
        return 1
    print(summary.read_text(encoding="utf-8"), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newsconn", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="draw a synthetic universe")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=None, help="override the configured seed")
    gen.set_defaults(fn=_cmd_generate)

    run = sub.add_parser("run", help="run the full analytics pipeline")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.set_defaults(fn=_cmd_run)

    summ = sub.add_parser("summarize", help="print the text summary of a run")
    summ.add_argument("--in", dest="in_dir", required=True)
    summ.set_defaults(fn=_cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"[{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
