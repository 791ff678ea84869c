"""Acceptance gate: one test per release criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (or ``python
tests/test_acceptance.py``).  The PASS/FAIL lines are printed even when
pytest captures output.
"""

import gc
import itertools
import statistics
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from chsalign.evaluate import batch_pairwise, extract_junction_alignments, load_forest, precision
from chsalign.oracle import brute_force_align
from chsalign.scoring import load_scheme, unit_scheme
from chsalign.structure_io import (
    SecondaryStructure,
    crosses,
    emit_bpseq,
    format_dotbracket_record,
    parse_bpseq,
    parse_dotbracket_text,
    remove_pseudoknots,
)
from chsalign.synthetic import random_structure
from chsalign.tree_align import AlignParams, align
from chsalign.tree_model import annotate, forest_from_structure, predict_chs_baseline

from conftest import DATA
from shapes import battery, random_annotated

UNIT = AlignParams(unit_scheme())
RIBOSWITCH = DATA / "riboswitch"


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        return ok
    return emit


# 1 ---------------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence(report):
    start = time.perf_counter()
    cases = mismatches = 0
    first_bad = None
    for l1, l2, f1, f2 in battery(draws_per_pair=40):
        cases += 1
        dp, oracle = align(f1, f2, UNIT).score, brute_force_align(f1, f2, UNIT)
        if dp != oracle:
            mismatches += 1
            first_bad = first_bad or (l1, l2, dp, oracle)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    report(1, ok, f"{cases} shape pairs, {mismatches} DP/oracle mismatches, {elapsed:.1f} s (limit 60 s)"
           + (f"; first mismatch {first_bad}" if first_bad else ""))
    assert ok


# 2 ---------------------------------------------------------------------------------

def test_criterion_2_fixture_regression(report):
    stacked = load_forest(DATA / "fx1.bpseq", annotation=DATA / "fx1.chs")
    unstacked = load_forest(DATA / "fx1.bpseq", annotation=DATA / "fx1_none.chs")
    other = load_forest(DATA / "fx1.bpseq", annotation=DATA / "fx1_h1h2.chs")
    got = (align(stacked, stacked, UNIT).score, align(unstacked, unstacked, UNIT).score,
           align(stacked, other, UNIT).score)
    ok = got == (121, 71, 7)
    report(2, ok, f"FX1 scores {tuple(int(g) for g in got)} (expected (121, 71, 7))")
    assert ok


# 3 ---------------------------------------------------------------------------------

def test_criterion_3_strict_precision(report, tmp_path):
    rng = np.random.default_rng(2024)
    schemes = [UNIT, AlignParams(load_scheme("ribosum85-60"))]
    tp = fp = 0
    for k in range(10_000):
        a = random_annotated(int(rng.integers(40, 120)), rng, ["none", "H1H2"])
        b = random_annotated(int(rng.integers(40, 120)), rng, ["none", "H1H2"])
        res = align(a, b, schemes[k % 2])
        r = precision(extract_junction_alignments(res, a, b))
        tp, fp = tp + r.tp, fp + r.fp
    # the class manifest plus one group holding every structure, so cross-class junctions meet too
    mixed = tmp_path / "mixed.txt"
    mixed.write_text("group all: " + " ".join(str(p) for p in sorted(RIBOSWITCH.glob("*.bpseq"))) + "\n")
    rows = []
    for manifest in (RIBOSWITCH / "groups.txt", mixed):
        rows += batch_pairwise(manifest, load_scheme("ribosum85-60")).rows
    batch_fp = sum(r.fp for r in rows)
    defined = [r.pr for r in rows if r.pr is not None]
    ok = fp == 0 and tp > 0 and batch_fp == 0 and defined and all(pr == 1 for pr in defined)
    report(3, ok, f"fuzz 10000 alignments: TP={tp} FP={fp}; riboswitch batches: {len(rows)} pairs, "
           f"FP={batch_fp}, defined PR values {sorted(set(map(str, defined)))}")
    assert ok


# 4 ---------------------------------------------------------------------------------

SAME = [("2GIS", "4B5R"), ("2G9C", "3RKF"), ("2GDI", "3D2G")]
CROSS = [("2GIS", "2G9C"), ("2G9C", "2GDI")]


def test_criterion_4_riboswitch_ordering(report):
    scheme = load_scheme("ribosum85-60")
    params = AlignParams(scheme)

    def score(a, b):
        fa = load_forest(RIBOSWITCH / f"{a}.bpseq", annotation=RIBOSWITCH / f"{a}.chs")
        fb = load_forest(RIBOSWITCH / f"{b}.bpseq", annotation=RIBOSWITCH / f"{b}.chs")
        return align(fa, fb, params).score

    same = {p: score(*p) for p in SAME}
    cross = {p: score(*p) for p in CROSS}
    margin = min(same.values()) - max(cross.values())
    ok = margin >= scheme.weight_value / 2
    fmt = lambda d: ", ".join(f"{a}/{b}={float(s):.2f}" for (a, b), s in d.items())  # noqa: E731
    report(4, ok, f"same-class {fmt(same)}; cross-class {fmt(cross)}; margin {float(margin):.2f} "
           f"(needs >= {float(scheme.weight_value / 2):g})")
    assert ok


# 5 ---------------------------------------------------------------------------------

def _time_pair(a, b, params, repeats):
    # best of several runs with the collector paused, to keep scheduler and GC noise out
    times = []
    gc.disable()
    try:
        for _ in range(repeats):
            start = time.perf_counter()
            align(a, b, params)
            times.append(time.perf_counter() - start)
    finally:
        gc.enable()
    return min(times)


def _annotated(ss):
    f = forest_from_structure(ss)
    return annotate(f, predict_chs_baseline(f, "flush"))


def test_criterion_5_complexity(report):
    params = AlignParams(load_scheme("ribosum85-60"))
    rng = np.random.default_rng(12)
    warm = _annotated(random_structure(200, rng))
    align(warm, warm, params)  # compile and cache the kernels outside the timings

    medians = {}
    for n in (500, 1000, 2000):
        samples = []
        for _ in range(7):
            a, b = _annotated(random_structure(n, rng)), _annotated(random_structure(n, rng))
            samples.append(_time_pair(a, b, params, repeats=5))
        medians[n] = statistics.median(samples)
    ratios = [medians[1000] / medians[500], medians[2000] / medians[1000]]

    a, b = _annotated(random_structure(3000, rng)), _annotated(random_structure(3000, rng))
    start = time.perf_counter()
    align(a, b, params)
    big = time.perf_counter() - start

    ok = all(2 <= r <= 6 for r in ratios) and big < 10
    times = ", ".join(f"{n} nt {t * 1000:.1f} ms" for n, t in medians.items())
    report(5, ok, f"{times}; doubling ratios {ratios[0]:.2f}, {ratios[1]:.2f} (band 2-6); "
           f"3000x3000 nt {big:.2f} s (limit 10 s)")
    assert ok


# 6 ---------------------------------------------------------------------------------

def test_criterion_6_weight_sweep(report):
    proc = subprocess.run(
        [sys.executable, "-m", "chsalign.cli", "align", str(DATA / "fx1.bpseq"), str(DATA / "fx1.bpseq"),
         "--annot1", str(DATA / "fx1.chs"), "--annot2", str(DATA / "fx1.chs"), "--scheme", "unit",
         "--sweep-w", "0,50,100,200"],
        capture_output=True, text=True,
    )
    rows = [line.split("\t") for line in proc.stdout.splitlines()[1:]]
    scores = [int(s) for _, s in rows]
    steps = {(s2 - s1) / (int(w2) - int(w1)) for (w1, s1), (w2, s2) in
             itertools.pairwise([(w, s) for (w, _), s in zip(rows, scores)])}
    ok = proc.returncode == 0 and scores == [21, 71, 121, 221] and steps == {1.0}
    report(6, ok, f"w=0,50,100,200 gives {scores} (expected [21, 71, 121, 221]), slope {sorted(steps)}")
    assert ok


# 7 ---------------------------------------------------------------------------------

def _max_nested(pairs):
    for size in range(len(pairs), -1, -1):
        for subset in itertools.combinations(pairs, size):
            if not any(crosses(p, q) for p, q in itertools.combinations(subset, 2)):
                return size
    return 0


def test_criterion_7_parsing_and_removal(report):
    rng = np.random.default_rng(77)
    unstable = 0
    for _ in range(100):
        ss = random_structure(int(rng.integers(20, 400)), rng)
        ss = SecondaryStructure(ss.sequence, ss.pairs, name="r")
        bp = emit_bpseq(ss)
        db = format_dotbracket_record(ss)
        bp_again = emit_bpseq(parse_dotbracket_text(db))
        db_again = format_dotbracket_record(parse_bpseq(bp, name="r"))
        if bp_again != bp or db_again != db or parse_bpseq(bp) != ss:
            unstable += 1

    wrong = checked = 0
    for count in range(0, 13):
        for _ in range(12):
            positions = rng.permutation(np.arange(1, 2 * count + 4))[: 2 * count]
            pairs = [tuple(sorted(map(int, positions[2 * k:2 * k + 2]))) for k in range(count)]
            ss = SecondaryStructure("A" * (2 * count + 3), tuple(pairs))
            kept, _ = remove_pseudoknots(ss)
            checked += 1
            if not kept.is_nested() or len(kept.pairs) != _max_nested(ss.pairs):
                wrong += 1
    ok = unstable == 0 and wrong == 0
    report(7, ok, f"100 round trips, {unstable} unstable; {checked} removal cases with 0-12 pairs, "
           f"{wrong} differ from brute force")
    assert ok


# 8 ---------------------------------------------------------------------------------

def test_criterion_8_symmetry(report):
    rng = np.random.default_rng(88)
    asymmetric = 0
    for _ in range(200):
        a = random_annotated(int(rng.integers(30, 200)), rng)
        b = random_annotated(int(rng.integers(30, 200)), rng)
        if align(a, b, UNIT).score != align(b, a, UNIT).score:
            asymmetric += 1
    ok = asymmetric == 0
    report(8, ok, f"200 random annotated pairs, {asymmetric} with score(A,B) != score(B,A)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([str(Path(__file__)), "-v"]))
