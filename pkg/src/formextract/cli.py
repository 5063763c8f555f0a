"""Command-line entry point: ``extract`` runs the batch pipeline, ``synth`` writes a corpus."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import batch
from .grammar import GrammarError
from .synth import (
    PERTURBATIONS,
    CorpusIoError,
    CorpusSpec,
    UnknownPerturbation,
    generate,
)


def _formats(value: str) -> tuple[str, ...]:
    formats = tuple(f.strip() for f in value.split(",") if f.strip())
    unknown = set(formats) - set(batch.FORMATS)
    if unknown or not formats:
        raise argparse.ArgumentTypeError(f"choose from {','.join(batch.FORMATS)}")
    return formats


def _perturbations(value: str) -> list[str]:
    return [p.strip() for p in value.split(",") if p.strip()]


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: exit 1, keeping 2 for runs where every file failed."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(batch.EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="formextract", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="extract records from a directory of PDFs")
    ex.add_argument("--input", required=True, type=Path, help="directory scanned recursively for *.pdf")
    ex.add_argument("--output", required=True, type=Path, help="output directory, one subdirectory per PDF")
    ex.add_argument("--workers", type=int, default=1)
    ex.add_argument("--dpi", type=int, default=300)
    ex.add_argument("--grammars", type=Path, default=None, help="grammar directory (default: built-in forms)")
    ex.add_argument("--formats", type=_formats, default=batch.FORMATS, help="comma list of csv,json,sql")
    ex.add_argument("--col-pitch", type=float, default=6.0)
    ex.add_argument("--row-pitch", type=float, default=12.0)
    ex.add_argument("--ink-threshold", type=int, default=100)
    ex.add_argument("--journal", type=Path, default=None, help="JSONL journal (default: OUTPUT/journal.jsonl)")

    sy = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    sy.add_argument("--seed", type=int, required=True)
    sy.add_argument("--count", type=int, required=True)
    sy.add_argument("--out", type=Path, required=True)
    sy.add_argument(
        "--perturb",
        type=_perturbations,
        default=[],
        help=f"comma list from {','.join(PERTURBATIONS)}",
    )
    sy.add_argument("--perturb-rate", type=float, default=0.25)
    return parser


def cmd_extract(args) -> int:
    config = batch.BatchConfig(
        input_dir=args.input,
        output_dir=args.output,
        workers=args.workers,
        dpi=args.dpi,
        grammar_dir=args.grammars,
        formats=args.formats,
        col_pitch=args.col_pitch,
        row_pitch=args.row_pitch,
        ink_threshold=args.ink_threshold,
        journal=args.journal,
    )
    try:
        summary = batch.run(config)
    except (batch.ConfigError, GrammarError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return batch.EXIT_CONFIG
    print(summary.describe())
    return summary.exit_code


def cmd_synth(args) -> int:
    try:
        spec = CorpusSpec(
            seed=args.seed, count=args.count, perturbations=frozenset(args.perturb), perturbation_rate=args.perturb_rate
        )
        manifest = generate(spec, args.out)
    except (ValueError, UnknownPerturbation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CorpusIoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(manifest['documents'])} documents to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "extract":
        return cmd_extract(args)
    return cmd_synth(args)


if __name__ == "__main__":
    sys.exit(main())
