"""Junction-alignment precision and batch pairwise runs."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .scoring import ScoringScheme
from .structure_io import read_structure, remove_pseudoknots, require_alignable
from .tree_align import AlignmentResult, AlignParams, align
from .tree_model import (
    JUNCTION,
    StructureForest,
    annotate,
    forest_from_structure,
    parse_annotations,
    predict_chs_baseline,
)

log = logging.getLogger(__name__)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class JunctionAlignment:
    junction1: int  # post-order index in forest 1
    junction2: int
    witness: tuple[int, int]  # first aligned loop nucleotide pair
    true_positive: bool


@dataclass
class PrecisionReport:
    tp: int
    fp: int
    pairs: list[JunctionAlignment] = field(default_factory=list)

    @property
    def value(self) -> Fraction | None:
        """TP / (TP + FP), or None when no junction alignment exists."""
        total = self.tp + self.fp
        return Fraction(self.tp, total) if total else None

    def formatted(self) -> str:
        v = self.value
        return "N/A" if v is None else f"{float(v):.4f}".rstrip("0").rstrip(".")


def extract_junction_alignments(result: AlignmentResult | Sequence[tuple[int | None, int | None]],
                                forest1: StructureForest,
                                forest2: StructureForest) -> list[JunctionAlignment]:
    """Junction pairs linked by at least one aligned pair of loop nucleotides.

    ``result`` may also be a bare list of (pos1, pos2) alignment columns, for
    scoring alignments produced elsewhere.
    """
    columns = result.flattened.columns if isinstance(result, AlignmentResult) else result
    owners1, owners2 = _junction_owners(forest1), _junction_owners(forest2)
    found: dict[tuple[int, int], JunctionAlignment] = {}
    for p, q in columns:
        if p is None or q is None:
            continue
        if p > forest1.structure.length or q > forest2.structure.length:
            raise ValueError(f"alignment column ({p}, {q}) is outside the given structures")
        j1, j2 = owners1.get(p), owners2.get(q)
        if j1 is None or j2 is None or (j1.index, j2.index) in found:
            continue
        tp = j1.chs is not None and j2.chs is not None and j1.chs.psi == j2.chs.psi
        found[j1.index, j2.index] = JunctionAlignment(j1.index, j2.index, (p, q), tp)
    return list(found.values())


def _junction_owners(forest: StructureForest):
    return {p: node for node in forest.nodes if node.kind == JUNCTION for seg in node.segments for p in seg}


def precision(alignments: Iterable[JunctionAlignment]) -> PrecisionReport:
    alignments = list(alignments)
    tp = sum(1 for a in alignments if a.true_positive)
    return PrecisionReport(tp, len(alignments) - tp, alignments)


# -- structure loading shared by the CLI and the batch runner ------------------

def load_forest(path: str | Path, fmt: str = "auto", annotation: str | Path | None = None,
                predictor: str = "flush", pseudoknots: str = "reject") -> StructureForest:
    """Read, validate and annotate one structure file.

    ``annotation`` names a sidecar file; without one, ``predictor`` decides
    the stacking status of every junction.
    """
    ss = read_structure(path, fmt)
    if pseudoknots == "remove":
        ss, removed = remove_pseudoknots(ss)
        if removed:
            log.warning("%s: removed %d pseudoknotted pairs", path, len(removed))
    diag = require_alignable(ss, str(path))
    for _, _, msg in diag.warnings:
        log.warning("%s: %s", path, msg)
    forest = forest_from_structure(ss)
    if annotation is not None:
        return parse_annotations(Path(annotation).read_text(encoding="utf-8"), forest)
    return annotate(forest, predict_chs_baseline(forest, predictor))


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".chs")


# -- batch ---------------------------------------------------------------------

def parse_manifest(text: str) -> list[tuple[str, list[str]]]:
    groups = []
    names = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"group\s+([^:\s]+)\s*:\s*(.*)", line)
        if not m:
            raise ManifestError(f"line {lineno}: expected 'group <name>: file1 file2 ...', got {raw.strip()!r}")
        name, files = m.group(1), m.group(2).split()
        if name in names:
            raise ManifestError(f"line {lineno}: duplicate group {name!r}")
        names.add(name)
        groups.append((name, files))
    return groups


def pair_count(group_sizes: Iterable[int]) -> int:
    return sum(n * (n - 1) // 2 for n in group_sizes)


@dataclass
class BatchRow:
    group: str
    file1: str
    file2: str
    score: Fraction
    tp: int
    fp: int
    pr: Fraction | None


@dataclass
class BatchReport:
    rows: list[BatchRow]
    averages: dict[str, tuple[Fraction | None, Fraction | None]]  # group -> (mean score, mean PR)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["group\tfile1\tfile2\tscore\tTP\tFP\tPR"]
        for r in self.rows:
            lines.append("\t".join([r.group, r.file1, r.file2, _fmt(r.score), str(r.tp), str(r.fp),
                                    "N/A" if r.pr is None else _fmt(r.pr)]))
        for group, (score, pr) in self.averages.items():
            tp = sum(r.tp for r in self.rows if r.group == group)
            fp = sum(r.fp for r in self.rows if r.group == group)
            lines.append("\t".join([group, "*average*", "*", "N/A" if score is None else _fmt(score),
                                    str(tp), str(fp), "N/A" if pr is None else _fmt(pr)]))
        return "\n".join(lines) + "\n"


def _fmt(value: Fraction) -> str:
    if Fraction(value).denominator == 1:
        return str(int(value))
    return f"{float(value):.4f}".rstrip("0").rstrip(".")


def _align_job(job):
    key, f1, f2, scheme = job
    result = align(f1, f2, AlignParams(scheme))
    report = precision(extract_junction_alignments(result, f1, f2))
    return key, result.score, report.tp, report.fp, report.value


def batch_pairwise(manifest: str | Path, scheme: ScoringScheme, annotations: str = "file",
                   fmt: str = "auto", pseudoknots: str = "reject", jobs: int = 1,
                   progress: Callable[[int, int], None] | None = None) -> BatchReport:
    """Align every unordered pair inside each manifest group.

    ``annotations`` is ``file`` (sidecar ``<structure>.chs`` next to each
    structure, unannotated junctions default to no stacking) or a predictor
    policy name (``none`` / ``flush``).
    """
    manifest = Path(manifest)
    base = manifest.parent
    groups = parse_manifest(manifest.read_text(encoding="utf-8"))
    forests: dict[str, StructureForest] = {}
    skipped: list[tuple[str, str]] = []
    for _, files in groups:
        for name in files:
            if name in forests or any(s[0] == name for s in skipped):
                continue
            path = base / name
            try:
                if annotations == "file":
                    side = sidecar_path(path)
                    forests[name] = load_forest(path, fmt, side if side.is_file() else None, "none", pseudoknots)
                else:
                    forests[name] = load_forest(path, fmt, None, annotations, pseudoknots)
            except (OSError, ValueError) as exc:
                log.warning("skipping %s: %s", name, exc)
                skipped.append((name, str(exc)))

    jobs_list = []
    for g, (group, files) in enumerate(groups):
        usable = [f for f in files if f in forests]
        for a, b in combinations(usable, 2):
            jobs_list.append(((g, group, a, b), forests[a], forests[b], scheme))

    results = []
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for k, res in enumerate(pool.map(_align_job, jobs_list, chunksize=8), 1):
                results.append(res)
                if progress:
                    progress(k, len(jobs_list))
    else:
        for k, job in enumerate(jobs_list, 1):
            results.append(_align_job(job))
            if progress:
                progress(k, len(jobs_list))

    rows = [BatchRow(group, a, b, score, tp, fp, pr) for (_, group, a, b), score, tp, fp, pr in results]
    averages = {}
    for _, (group, _files) in enumerate(groups):
        mine = [r for r in rows if r.group == group]
        if not mine:
            continue
        defined = [r.pr for r in mine if r.pr is not None]
        averages[group] = (sum((r.score for r in mine), Fraction(0)) / len(mine),
                           sum(defined, Fraction(0)) / len(defined) if defined else None)
    return BatchReport(rows, averages, skipped)


def sweep_weight(forest1: StructureForest, forest2: StructureForest, scheme: ScoringScheme,
                 weights: Sequence) -> list[tuple[Fraction, Fraction]]:
    """Best alignment score for each junction weight."""
    out = []
    for w in weights:
        result = align(forest1, forest2, AlignParams(scheme.with_params(weight=w)))
        out.append((Fraction(w), result.score))
    return out
