from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chsalign.oracle import OracleLimitError, brute_force_align
from chsalign.scoring import gamma, load_scheme, unit_scheme
from chsalign.structure_io import parse_dotbracket
from chsalign.tree_align import (
    AlignParams,
    align,
    backtrack,
    best_cell,
    check_trace,
    fill_table,
    flatten,
    trace_score,
)
from chsalign.tree_model import AnnotationError, HAIRPIN, JUNCTION, forest_from_structure

from conftest import FX1_DB, FX1_SEQ, forest
from shapes import battery, random_annotated

UNIT = AlignParams(unit_scheme())


def stem(seq, db):
    return forest(seq, db)


# -- reference values -----------------------------------------------------------------

def test_fx1_stacked_self(fx1_h1h3):
    res = align(fx1_h1h3, fx1_h1h3, UNIT)
    assert res.score == 121
    assert res.best_cell == (6, 6)
    assert brute_force_align(fx1_h1h3, fx1_h1h3, UNIT) == 121


def test_fx1_unstacked_self(fx1_none):
    res = align(fx1_none, fx1_none, UNIT)
    assert res.score == 71
    assert brute_force_align(fx1_none, fx1_none, UNIT) == 71


def test_fx1_stacking_mismatch(fx1_h1h3, fx1_h1h2):
    res = align(fx1_h1h3, fx1_h1h2, UNIT)
    assert res.score == 7
    assert res.best_cell == (2, 2)
    assert brute_force_align(fx1_h1h3, fx1_h1h2, UNIT) == 7
    # the junction cell is gated down to the zero floor
    assert res.table.value(5, 5) == 0


def test_fx1_against_plain_stem(fx1_h1h3):
    hp = stem("GCGAAACGC", "(((...)))")
    oracle = brute_force_align(fx1_h1h3, hp, UNIT)
    assert align(fx1_h1h3, hp, UNIT).score == oracle
    assert align(hp, fx1_h1h3, UNIT).score == oracle


def test_single_stem_pair_is_gamma_sum():
    a = stem("GCAAAGC", "((...))")
    b = stem("GCAGAGC", "((...))")
    expected = max(Fraction(0), gamma(a.node(2), b.node(2), UNIT.scheme)
                   + max(gamma(a.node(1), b.node(1), UNIT.scheme), 0))
    assert align(a, b, UNIT).score == expected == 4 + 1


def test_all_mismatch_gives_empty_result():
    a = stem("GGGAAACCC", "(((...)))")
    b = stem("AAACCCUUU", "(((...)))")
    res = align(a, b, UNIT)
    assert res.score == 0
    assert res.best_cell is None
    assert res.trace == []
    assert res.flattened.columns == []
    assert best_cell(res.table) is None
    assert backtrack(res.table, None) == []


# -- trace ---------------------------------------------------------------------------

def test_fx1_trace_matches_every_node(fx1_h1h3):
    res = align(fx1_h1h3, fx1_h1h3, UNIT)
    assert sorted((s.op, s.i, s.j) for s in res.trace) == [("match", k, k) for k in range(1, 7)]
    assert trace_score(res.trace) == res.score
    check_trace(res.trace, fx1_h1h3, fx1_h1h3)


def test_backtrack_gaps_helix_above_junction(fx1_h1h3):
    # structure 2 carries an extra outer helix; backtracking from the junction/helix
    # cell skips it and then matches the junctions
    other = forest("GGGAGCAAAGCACGUUUCGACCC", "(((.((...)).((...)).)))", "H1H3")
    table = fill_table(fx1_h1h3, other, UNIT)
    j1 = fx1_h1h3.junctions()[0].index
    j2 = other.junctions()[0].index
    h2 = j2 + 1
    assert other.node(h2).children[0].index == j2
    trace = backtrack(table, (j1, h2))
    first = trace[0]
    assert (first.op, first.j, first.case, first.alternative) == ("gap2", h2, 4, 1)
    assert ("match", j1, j2) in [(s.op, s.i, s.j) for s in trace]
    assert trace_score(trace) == table.value(j1, h2)
    check_trace(trace, fx1_h1h3, other)


def test_backtrack_gaps_junction_above_helix(fx1_h1h3):
    # structure 2 is a single stem identical to the first child helix of the junction
    other = stem("GCAAAGC", "((...))")
    table = fill_table(fx1_h1h3, other, UNIT)
    trace = backtrack(table, (5, 2))
    assert (trace[0].op, trace[0].i, trace[0].case, trace[0].alternative) == ("gap1", 5, 4, 2)
    assert [(s.op, s.i, s.j) for s in trace[1:]] == [("match", 2, 2), ("match", 1, 1)]
    assert trace_score(trace) == table.value(5, 2) == -3 + 4 + 3


def test_backtrack_mirrored_cases(fx1_h1h3):
    other = stem("GCAAAGC", "((...))")
    table = fill_table(other, fx1_h1h3, UNIT)
    trace = backtrack(table, (2, 5))
    assert (trace[0].op, trace[0].j, trace[0].case) == ("gap2", 5, 6)
    assert trace_score(trace) == table.value(2, 5)


def test_best_cell_traces_start_with_a_match():
    rng = np.random.default_rng(11)
    for _ in range(40):
        a, b = random_annotated(80, rng, ["none", "H1H2"]), random_annotated(80, rng, ["none", "H1H2"])
        res = align(a, b, UNIT)
        if res.trace:
            assert res.trace[0].op == "match"


def test_unannotated_junction_rejected():
    raw = forest_from_structure(parse_dotbracket(FX1_SEQ, FX1_DB))
    with pytest.raises(AnnotationError):
        align(raw, raw, UNIT)


def test_params_reject_other_modes():
    with pytest.raises(ValueError):
        AlignParams(unit_scheme(), mode="relaxed")


# -- flatten ---------------------------------------------------------------------------

def test_flatten_identity(fx1_h1h3):
    res = align(fx1_h1h3, fx1_h1h3, UNIT)
    assert res.flattened.columns == [(p, p) for p in range(1, 22)]
    seq1, markers, seq2, br1, br2 = res.flattened.rows
    assert seq1 == seq2 == FX1_SEQ
    assert markers == "|" * 21
    assert br1 == br2 == FX1_DB


def test_flatten_extra_hairpin_base(fx1_h1h3):
    longer = forest("GGAGCAAAAGCACGUUUCGACC", "((.((....)).((...)).))", "H1H3")
    res = align(fx1_h1h3, longer, UNIT)
    assert res.score == 120
    gaps = [c for c in res.flattened.columns if c[0] is None or c[1] is None]
    assert len(gaps) == 1
    hairpin = next(n for n in longer.nodes if n.kind == HAIRPIN)
    assert gaps[0][0] is None and gaps[0][1] in hairpin.loop


def test_flatten_empty_trace(fx1_h1h3):
    flat = flatten([], fx1_h1h3, fx1_h1h3)
    assert flat.columns == [] and flat.rows == ("", "", "", "", "")


def check_flat(res, f1, f2):
    cols = res.flattened.columns
    left = [p for p, _ in cols if p is not None]
    right = [q for _, q in cols if q is not None]
    assert left == sorted(set(left)) and right == sorted(set(right))
    traced1 = sorted(p for s in res.trace if s.i is not None for p in f1.node(s.i).positions())
    traced2 = sorted(q for s in res.trace if s.j is not None for q in f2.node(s.j).positions())
    assert left == traced1 and right == traced2


# -- properties -------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(30, 150), st.integers(30, 150))
def test_alignment_properties(seed, n1, n2):
    rng = np.random.default_rng(seed)
    a = random_annotated(n1, rng, ["none", "H1H2", "H1H3"])
    b = random_annotated(n2, rng, ["none", "H1H2", "H1H3"])
    res = align(a, b, UNIT)
    raw = res.table.raw_array()
    assert (raw >= 0).all()
    assert trace_score(res.trace) == res.score
    check_trace(res.trace, a, b)
    check_flat(res, a, b)
    mirrored = align(b, a, UNIT)
    assert mirrored.score == res.score
    assert np.array_equal(mirrored.table.raw_array(), raw.T)


def test_kernel_gammas_match_reference():
    rng = np.random.default_rng(5)
    scheme = load_scheme("ribosum85-60")
    for _ in range(5):
        a = random_annotated(120, rng, ["none", "H2H3"])
        b = random_annotated(120, rng, ["none", "H2H3"])
        table = fill_table(a, b, AlignParams(scheme))
        for (i, j), raw in table.gammas.items():
            assert Fraction(raw, 200) == gamma(a.node(i), b.node(j), scheme)
        for x in a.nodes:
            for y in b.nodes:
                if (x.index, y.index) not in table.gammas:
                    assert gamma(x, y, scheme) == -float("inf")


def test_weight_monotone_and_piecewise_linear(fx1_h1h3, fx1_none):
    for f, slope in [(fx1_h1h3, 1), (fx1_none, Fraction(1, 2))]:
        scores = [align(f, f, AlignParams(unit_scheme().with_params(weight=w))).score for w in (0, 50, 100, 200)]
        assert scores == sorted(scores)
        assert [s - scores[0] for s in scores] == [slope * w for w in (0, 50, 100, 200)]


def test_weight_monotone_random():
    rng = np.random.default_rng(17)
    for _ in range(15):
        a, b = random_annotated(90, rng, ["none", "H1H2"]), random_annotated(90, rng, ["none", "H1H2"])
        scores = [align(a, b, AlignParams(unit_scheme().with_params(weight=w))).score for w in (0, 20, 40, 80)]
        assert scores == sorted(scores)


def test_psi_gate_in_traces():
    rng = np.random.default_rng(23)
    for _ in range(30):
        a, b = random_annotated(100, rng), random_annotated(100, rng)
        res = align(a, b, UNIT)
        for s in res.trace:
            if s.op == "match":
                x, y = a.node(s.i), b.node(s.j)
                assert x.kind == y.kind
                if x.kind == JUNCTION:
                    assert x.chs.psi == y.chs.psi


# -- oracle ------------------------------------------------------------------------

def test_dp_equals_oracle_on_shape_battery():
    for l1, l2, f1, f2 in battery(draws_per_pair=3, seed=99):
        assert align(f1, f2, UNIT).score == brute_force_align(f1, f2, UNIT), (l1, l2)


def test_oracle_limits(fx1_h1h3):
    big = forest("GG" + FX1_SEQ + "CC", "((" + FX1_DB + "))", "H1H3")
    with pytest.raises(OracleLimitError):
        brute_force_align(big, big, UNIT)
    bigger = forest(FX1_SEQ + "GGAAAACC", FX1_DB + "((....))")
    with pytest.raises(OracleLimitError):
        brute_force_align(bigger, fx1_h1h3, UNIT)
