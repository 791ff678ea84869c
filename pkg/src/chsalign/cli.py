"""Command-line interface: ``chsalign {align,annotate,eval,convert}``."""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .evaluate import ManifestError, batch_pairwise, load_forest, sweep_weight
from .report import machine_report, text_report
from .scoring import SchemeError, format_score, load_scheme
from .structure_io import (
    NoPairsError,
    PseudoknotError,
    StructureError,
    emit_bpseq,
    format_dotbracket_record,
    read_structure,
    remove_pseudoknots,
)
from .tree_align import AlignParams, align
from .tree_model import AnnotationError, format_annotations

log = logging.getLogger("chsalign")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_PSEUDOKNOT = 4
EXIT_NO_PAIRS = 5
EXIT_ANNOTATION = 6
EXIT_SCHEME = 7
EXIT_MANIFEST = 8
EXIT_IO = 9

# most specific first
_EXIT_CODES = [
    (PseudoknotError, EXIT_PSEUDOKNOT),
    (NoPairsError, EXIT_NO_PAIRS),
    (AnnotationError, EXIT_ANNOTATION),
    (SchemeError, EXIT_SCHEME),
    (ManifestError, EXIT_MANIFEST),
    (StructureError, EXIT_PARSE),
    (OSError, EXIT_IO),
]


def _add_structure_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["auto", "bpseq", "dotbracket"], default="auto",
                   help="input structure format (default: guess from content)")
    p.add_argument("--pseudoknots", choices=["reject", "remove"], default="reject",
                   help="reject crossing pairs or drop a minimum set of them (default: reject)")


def _add_scoring_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", default="ribosum85-60",
                   help="'ribosum85-60', 'unit', a scheme name in $CHSALIGN_SCHEME_DIR, or a file path")
    p.add_argument("--gap", type=Fraction, default=None, help="per-nucleotide gap score (default -1)")
    p.add_argument("--weight", "-w", type=Fraction, default=None, help="junction weight w (default 100)")


def _parse_weights(text: str) -> list[Fraction]:
    try:
        return [Fraction(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad weight list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chsalign",
                                     description="Align RNA secondary structures with coaxial helical stacking.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align two structures")
    p.add_argument("structure1", type=Path)
    p.add_argument("structure2", type=Path)
    p.add_argument("--annot1", type=Path, help="junction annotation file for structure 1")
    p.add_argument("--annot2", type=Path, help="junction annotation file for structure 2")
    p.add_argument("--predictor", choices=["none", "flush"], default="flush",
                   help="stacking predictor for structures without an annotation file (default: flush)")
    _add_structure_options(p)
    _add_scoring_options(p)
    p.add_argument("--output-format", choices=["text", "machine"], default="text")
    p.add_argument("-o", "--output", type=Path, help="write the report here instead of stdout")
    p.add_argument("--sweep-w", type=_parse_weights, metavar="W1,W2,...",
                   help="print score against each junction weight instead of an alignment")
    p.add_argument("--plot", type=Path, help="with --sweep-w: also write a figure of the sweep")

    p = sub.add_parser("annotate", help="write a junction annotation file")
    p.add_argument("structure", type=Path)
    p.add_argument("--predictor", choices=["none", "flush"], default="flush")
    _add_structure_options(p)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("eval", help="all-pairs alignment and precision over manifest groups")
    p.add_argument("manifest", type=Path)
    p.add_argument("--annotations", choices=["file", "none", "flush"], default="file",
                   help="'file' reads <structure>.chs sidecars; otherwise the named predictor")
    _add_structure_options(p)
    _add_scoring_options(p)
    p.add_argument("-j", "--jobs", type=int, default=1)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--plot", type=Path, help="write a score/precision figure next to the table")

    p = sub.add_parser("convert", help="convert between bpseq and dot-bracket")
    p.add_argument("structure", type=Path)
    p.add_argument("--format", choices=["auto", "bpseq", "dotbracket"], default="auto")
    p.add_argument("--to", choices=["bpseq", "dotbracket"], required=True)
    p.add_argument("--remove-pseudoknots", action="store_true")
    p.add_argument("-o", "--output", type=Path)
    return parser


def _write(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _scheme(args):
    return load_scheme(args.scheme).with_params(gap=args.gap, weight=args.weight)


def cmd_align(args) -> int:
    scheme = _scheme(args)
    f1 = load_forest(args.structure1, args.format, args.annot1, args.predictor, args.pseudoknots)
    f2 = load_forest(args.structure2, args.format, args.annot2, args.predictor, args.pseudoknots)
    if args.sweep_w:
        points = sweep_weight(f1, f2, scheme, args.sweep_w)
        lines = ["w\tscore"] + [f"{format_score(w)}\t{format_score(s)}" for w, s in points]
        _write("\n".join(lines) + "\n", args.output)
        if args.plot:
            from .plotting import plot_weight_sweep
            plot_weight_sweep(points, args.plot, f"{args.structure1.stem} vs {args.structure2.stem}")
        return EXIT_OK
    result = align(f1, f2, AlignParams(scheme))
    if args.output_format == "machine":
        report = machine_report(result, f1, f2)
    else:
        report = text_report(result, f1, f2, args.structure1.name, args.structure2.name)
    _write(report, args.output)
    return EXIT_OK


def cmd_annotate(args) -> int:
    forest = load_forest(args.structure, args.format, None, args.predictor, args.pseudoknots)
    _write(format_annotations(forest, f"{args.structure.name}: predictor {args.predictor}"), args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    scheme = _scheme(args)
    report = batch_pairwise(args.manifest, scheme, args.annotations, args.format, args.pseudoknots, args.jobs)
    _write(report.to_tsv(), args.output)
    for name, reason in report.skipped:
        print(f"warning: skipped {name}: {reason}", file=sys.stderr)
    if args.plot:
        from .plotting import plot_batch
        plot_batch(report, args.plot)
    return EXIT_OK


def cmd_convert(args) -> int:
    ss = read_structure(args.structure, args.format)
    if args.remove_pseudoknots:
        ss, removed = remove_pseudoknots(ss)
        if removed:
            log.warning("removed %d pseudoknotted pairs", len(removed))
    text = emit_bpseq(ss) if args.to == "bpseq" else format_dotbracket_record(ss)
    _write(text, args.output)
    return EXIT_OK


COMMANDS = {"align": cmd_align, "annotate": cmd_annotate, "eval": cmd_eval, "convert": cmd_convert}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        for cls, code in _EXIT_CODES:
            if isinstance(exc, cls):
                print(f"chsalign {args.command}: error: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
