"""Command line interface: a thin layer over the library.

Subcommands: validate, score, sample, synth, report, sweep, serve. All logic
lives in the library modules; this file only parses arguments, wires files,
and maps errors to exit code 1.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import PoolFormatError, PoolValidationError
from .pool_io import load_pool, save_pool, summarize_pool
from .report import load_grid, report_to_text, selection_report, sweep, write_report, write_sweep_csv
from .sampler import SelectionConfig, run_selection, selection_from_doc, selection_to_json
from .scoring import score_pool, scores_to_csv
from .synth import SyntheticSpec, generate_pool

CLI_SELECTORS = {
    "sas": "sas",
    "margin": "margin_only",
    "mixed": "mixed",
    "random": "random",
    "kcenter": "kcenter",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sas",
        description="Semantic-aware subset selection over embedding pools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a pool file and print a summary")
    p.add_argument("pool", type=Path)

    p = sub.add_parser("score", help="compute per-image scores as CSV")
    p.add_argument("--pool", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--lambda", dest="lambda_", type=float, default=None,
                   help="also emit the mixed score for this weight")

    p = sub.add_parser("sample", help="select a per-class subset")
    p.add_argument("--pool", type=Path, required=True)
    p.add_argument("--ipc", type=int, required=True)
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--selector", choices=sorted(CLI_SELECTORS), default="sas")
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-rel", action="store_true")
    p.add_argument("--no-sep", action="store_true")
    p.add_argument("--no-div", action="store_true")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("synth", help="generate a synthetic pool file")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--dup", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("report", help="quality metrics for a selection")
    p.add_argument("--pool", type=Path, required=True)
    p.add_argument("--selection", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True,
                   help="output path, .json or .csv")

    p = sub.add_parser("sweep", help="run a grid of configs, emit CSV rows")
    p.add_argument("--pool", type=Path, required=True)
    p.add_argument("--grid", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (PoolFormatError, PoolValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "validate":
        pool = load_pool(args.pool)
        print(summarize_pool(pool))
        return 0

    if args.command == "score":
        pool = load_pool(args.pool)
        table = score_pool(pool)
        with open(args.out, "w", newline="") as handle:
            scores_to_csv(pool, table, handle, lambda_=args.lambda_)
        return 0

    if args.command == "sample":
        config = _config_from_args(args)
        pool = load_pool(args.pool)
        table = score_pool(pool)
        selection = run_selection(pool, table, config)
        Path(args.out).write_text(selection_to_json(selection))
        for warning in selection.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        return 0

    if args.command == "synth":
        spec = SyntheticSpec(
            dim=args.dim,
            n_classes=args.classes,
            per_class=args.per_class,
            concentration=args.kappa,
            duplicate_fraction=args.dup,
            seed=args.seed,
        )
        save_pool(generate_pool(spec), args.out)
        return 0

    if args.command == "report":
        pool = load_pool(args.pool)
        table = score_pool(pool)
        doc = json.loads(Path(args.selection).read_text())
        selection = selection_from_doc(doc, pool, table)
        report = selection_report(pool, table, selection)
        write_report(report, args.out)
        print(report_to_text(report))
        return 0

    if args.command == "sweep":
        pool = load_pool(args.pool)
        grid = load_grid(args.grid)
        rows = sweep(pool, grid)
        with open(args.out, "w", newline="") as handle:
            write_sweep_csv(rows, handle)
        return 0

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    raise ValueError(f"unknown command {args.command!r}")


def _config_from_args(args: argparse.Namespace) -> SelectionConfig:
    selector = CLI_SELECTORS[args.selector]
    if selector == "mixed" and args.lambda_ is None:
        raise ValueError("selector 'mixed' requires --lambda")
    config = SelectionConfig(
        ipc=args.ipc,
        candidate_ratio=args.ratio,
        selector=selector,
        lambda_=args.lambda_ if args.lambda_ is not None else 0.0,
        seed=args.seed,
        use_rel=not args.no_rel,
        use_sep=not args.no_sep,
        use_div=not args.no_div,
    )
    config.validate()
    return config


if __name__ == "__main__":
    sys.exit(main())
