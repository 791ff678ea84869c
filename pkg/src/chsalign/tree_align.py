"""Constrained ordered-tree alignment of two structure forests.

``fill_table`` computes S(T1[i], T2[j]) for every pair of subtrees under the
nine kind combinations (junction, helix, hairpin on each side).  Nodes of
different kinds never match; junctions match only when branch count and
stacking status agree.  Every cell is floored at zero, so the best cell gives
a local alignment that ``backtrack`` recovers and ``flatten`` turns into
nucleotide columns.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._kernels import nw_pairs
from .scoring import (
    NEG_INF,
    NodeAlignment,
    ScoringScheme,
    from_raw,
    gamma_alignment,
    junction_bonus_raw,
    node_units,
)
from .tree_model import HAIRPIN, HELIX, JUNCTION, AnnotationError, StructureForest, TreeNode

# case numbers follow the kind combinations: 1 J/J, 2 H/H, 3 P/P, 4 J/H,
# 5 J/P, 6 H/J, 7 H/P, 8 P/J, 9 P/H
_CASE = {
    (JUNCTION, JUNCTION): 1, (HELIX, HELIX): 2, (HAIRPIN, HAIRPIN): 3,
    (JUNCTION, HELIX): 4, (JUNCTION, HAIRPIN): 5, (HELIX, JUNCTION): 6,
    (HELIX, HAIRPIN): 7, (HAIRPIN, JUNCTION): 8, (HAIRPIN, HELIX): 9,
}


@dataclass
class AlignParams:
    scheme: ScoringScheme
    report: str = "best"
    mode: str = "strict"

    def __post_init__(self):
        if self.mode != "strict":
            raise ValueError(f"unsupported alignment mode {self.mode!r}")
        if self.report != "best":
            raise ValueError(f"unsupported report policy {self.report!r}")


@dataclass(eq=False)
class ScoreTable:
    forest1: StructureForest
    forest2: StructureForest
    params: AlignParams
    raw: list[list[int]]  # 1-based; row/column 0 unused
    alt: list[list[int]]  # chosen alternative, 0 = zero floor
    pick: list[list[int]]  # child slot for the max-over-children alternatives
    gammas: dict[tuple[int, int], int]  # raw match scores of same-kind pairs (finite only)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.forest1), len(self.forest2)

    def value(self, i: int, j: int) -> Fraction:
        return from_raw(self.raw[i][j])

    def values(self) -> np.ndarray:
        """Table of S as exact Fractions (object array, 0-based)."""
        out = np.empty(self.shape, dtype=object)
        for i in range(1, self.shape[0] + 1):
            for j in range(1, self.shape[1] + 1):
                out[i - 1, j - 1] = from_raw(self.raw[i][j])
        return out

    def raw_array(self) -> np.ndarray:
        return np.array([row[1:] for row in self.raw[1:]], dtype=np.int64).reshape(self.shape)


@dataclass
class TraceStep:
    op: str  # "match", "gap1" (node of forest1 against gaps) or "gap2"
    i: int | None
    j: int | None
    kind: str
    case: int
    alternative: int
    gamma: Fraction
    alignment: NodeAlignment = field(repr=False)


@dataclass
class FlatAlignment:
    columns: list[tuple[int | None, int | None]]
    rows: tuple[str, str, str, str, str]  # seq1, markers, seq2, brackets1, brackets2


@dataclass
class AlignmentResult:
    score: Fraction
    best_cell: tuple[int, int] | None
    trace: list[TraceStep]
    flattened: FlatAlignment
    stats: dict
    table: ScoreTable = field(repr=False)


# -- gamma precomputation ------------------------------------------------------

def _encode(forest: StructureForest):
    codes, offsets, owner = [], [0], {}
    for node in forest.nodes:
        ids = []
        for unit in node_units(node):
            codes.extend(unit)
            offsets.append(len(codes))
            ids.append(len(offsets) - 2)
        owner[node.index] = ids
    return np.array(codes, dtype=np.int64), np.array(offsets, dtype=np.int64), owner


def _match_gammas(f1: StructureForest, f2: StructureForest, scheme: ScoringScheme) -> dict[tuple[int, int], int]:
    codes1, off1, units1 = _encode(f1)
    codes2, off2, units2 = _encode(f2)
    pairs: list[tuple[int, int]] = []
    left: list[int] = []
    right: list[int] = []
    by_kind2: dict[str, list[TreeNode]] = {HELIX: [], HAIRPIN: [], JUNCTION: []}
    for node in f2.nodes:
        by_kind2[node.kind].append(node)
    for n1 in f1.nodes:
        for n2 in by_kind2[n1.kind]:
            if n1.kind == JUNCTION and n1.chs.psi != n2.chs.psi:
                continue
            pairs.append((n1.index, n2.index))
            left.extend(units1[n1.index])
            right.extend(units2[n2.index])
    if not pairs:
        return {}
    scores = nw_pairs(codes1, off1, codes2, off2, np.array(left, dtype=np.int64),
                      np.array(right, dtype=np.int64), scheme.single, scheme.pair, scheme.gap)
    out = {}
    k = 0
    for i, j in pairs:
        n1 = f1.node(i)
        width = len(units1[i])
        raw = int(scores[k:k + width].sum())
        k += width
        if n1.kind == JUNCTION:
            raw += junction_bonus_raw(n1, f2.node(j), scheme)
        out[i, j] = raw
    return out


# -- fill ---------------------------------------------------------------------

def _check_annotated(forest: StructureForest, which: str) -> None:
    for node in forest.nodes:
        if node.kind == JUNCTION and node.chs is None:
            raise AnnotationError(f"{which}: junction {node.label()} has no CHS annotation")


def fill_table(forest1: StructureForest, forest2: StructureForest, params: AlignParams) -> ScoreTable:
    _check_annotated(forest1, "structure 1")
    _check_annotated(forest2, "structure 2")
    scheme = params.scheme
    gammas = _match_gammas(forest1, forest2, scheme)
    n1, n2 = len(forest1), len(forest2)
    kinds1 = [None] + [n.kind for n in forest1.nodes]
    kinds2 = [None] + [n.kind for n in forest2.nodes]
    kids1 = [None] + [[c.index for c in n.children] for n in forest1.nodes]
    kids2 = [None] + [[c.index for c in n.children] for n in forest2.nodes]
    gap1 = [0] + [n.size * scheme.gap for n in forest1.nodes]
    gap2 = [0] + [n.size * scheme.gap for n in forest2.nodes]

    S = [[0] * (n2 + 1) for _ in range(n1 + 1)]
    alt = [[0] * (n2 + 1) for _ in range(n1 + 1)]
    pick = [[0] * (n2 + 1) for _ in range(n1 + 1)]

    def best_child(values):
        k = max(range(len(values)), key=lambda idx: (values[idx], -idx))
        return k, values[k]

    for i in range(1, n1 + 1):
        ki = kinds1[i]
        Si, alti, picki = S[i], alt[i], pick[i]
        for j in range(1, n2 + 1):
            kj = kinds2[j]
            cands: list = []
            k = 0
            if ki == kj:
                g = gammas.get((i, j))
                if ki == JUNCTION:
                    # Ψ unequal: the forest term is -inf, only the zero floor remains
                    if g is not None:
                        cands = [g + sum(S[a][b] for a, b in zip(kids1[i], kids2[j]))]
                elif ki == HELIX:
                    cands = [g + S[kids1[i][0]][kids2[j][0]], g]
                else:
                    cands = [g]
            elif ki == JUNCTION:
                if kj == HELIX:
                    cands.append(gap2[j] + Si[kids2[j][0]])
                k, v = best_child([S[c][j] for c in kids1[i]])
                cands.append(gap1[i] + v)
            elif kj == JUNCTION:
                if ki == HELIX:
                    cands.append(gap1[i] + S[kids1[i][0]][j])
                k, v = best_child([Si[c] for c in kids2[j]])
                cands.append(gap2[j] + v)
            elif ki == HELIX:  # helix vs hairpin
                cands.append(gap1[i] + S[kids1[i][0]][j])
            else:  # hairpin vs helix
                cands.append(gap2[j] + Si[kids2[j][0]])

            # first maximal alternative wins; zero cells are never expanded
            best, choice = 0, 0
            for a, c in enumerate(cands, 1):
                if c > best:
                    best, choice = c, a
            Si[j] = best
            alti[j] = choice
            picki[j] = k
    return ScoreTable(forest1, forest2, params, S, alt, pick, gammas)


def best_cell(table: ScoreTable) -> tuple[int, int] | None:
    """Cell of maximum score, smallest (i, j) on ties; None if every cell is zero."""
    best, cell = 0, None
    for i in range(1, table.shape[0] + 1):
        row = table.raw[i]
        for j in range(1, table.shape[1] + 1):
            if row[j] > best:
                best, cell = row[j], (i, j)
    return cell


# -- backtrack -----------------------------------------------------------------

def backtrack(table: ScoreTable, cell: tuple[int, int] | None) -> list[TraceStep]:
    if cell is None:
        return []
    f1, f2, scheme = table.forest1, table.forest2, table.params.scheme
    trace: list[TraceStep] = []
    stack = [cell]
    while stack:
        i, j = stack.pop()
        if table.raw[i][j] == 0:
            continue
        a = table.alt[i][j]
        t1, t2 = f1.node(i), f2.node(j)
        case = _CASE[t1.kind, t2.kind]
        assert a > 0, f"cell ({i}, {j}) is positive but carries no alternative"

        def step(op, node1, node2):
            al = gamma_alignment(node1, node2, scheme)
            kind = (node1 or node2).kind
            trace.append(TraceStep(op, node1.index if node1 else None, node2.index if node2 else None,
                                   kind, case, a, al.score, al))

        if case == 1:
            step("match", t1, t2)
            for c1, c2 in reversed(list(zip(t1.children, t2.children))):
                stack.append((c1.index, c2.index))
        elif case == 2:
            step("match", t1, t2)
            if a == 1:
                stack.append((t1.children[0].index, t2.children[0].index))
        elif case == 3:
            step("match", t1, t2)
        elif case in (4, 9) and a == 1:
            step("gap2", None, t2)
            stack.append((i, t2.children[0].index))
        elif case in (4, 5):
            step("gap1", t1, None)
            stack.append((t1.children[table.pick[i][j]].index, j))
        elif case in (6, 7) and a == 1:
            step("gap1", t1, None)
            stack.append((t1.children[0].index, j))
        else:  # case 6 alternative 2, case 8
            step("gap2", None, t2)
            stack.append((i, t2.children[table.pick[i][j]].index))
    return trace


# -- flatten -------------------------------------------------------------------

def flatten(trace: list[TraceStep], forest1: StructureForest, forest2: StructureForest) -> FlatAlignment:
    matched: list[tuple[int | None, int | None]] = []
    only2: list[int] = []
    for st in trace:
        for unit in st.alignment.units:
            if unit.op == "match":
                matched.extend(zip(unit.pos1, unit.pos2))
            elif unit.op == "gap1":
                matched.extend((p, None) for p in unit.pos1)
            else:
                only2.extend(unit.pos2)
    matched.sort(key=lambda c: c[0])
    only2.sort()
    columns: list[tuple[int | None, int | None]] = []
    k = 0
    for col in matched:
        if col[1] is not None:
            while k < len(only2) and only2[k] < col[1]:
                columns.append((None, only2[k]))
                k += 1
        columns.append(col)
    columns.extend((None, p) for p in only2[k:])

    s1, s2 = forest1.structure, forest2.structure
    br1, br2 = _bracket_chars(s1), _bracket_chars(s2)
    rows = ([], [], [], [], [])
    for p, q in columns:
        b1 = s1.sequence[p - 1] if p else "-"
        b2 = s2.sequence[q - 1] if q else "-"
        rows[0].append(b1)
        rows[2].append(b2)
        rows[1].append(" " if not (p and q) else ("|" if b1 == b2 else "."))
        rows[3].append(br1[p - 1] if p else "-")
        rows[4].append(br2[q - 1] if q else "-")
    return FlatAlignment(columns, tuple("".join(r) for r in rows))


def _bracket_chars(ss) -> list[str]:
    chars = ["."] * ss.length
    for i, j in ss.pairs:
        chars[i - 1], chars[j - 1] = "(", ")"
    return chars


# -- driver --------------------------------------------------------------------

def align(forest1: StructureForest, forest2: StructureForest, params: AlignParams) -> AlignmentResult:
    start = time.perf_counter()
    table = fill_table(forest1, forest2, params)
    cell = best_cell(table)
    trace = backtrack(table, cell)
    elapsed = time.perf_counter() - start
    score = table.value(*cell) if cell else Fraction(0)
    return AlignmentResult(
        score=score,
        best_cell=cell,
        trace=trace,
        flattened=flatten(trace, forest1, forest2),
        stats={"cpu_time": elapsed, "table": table.shape},
        table=table,
    )


def trace_score(trace: list[TraceStep]) -> Fraction:
    return sum((st.gamma for st in trace), Fraction(0))


def check_trace(trace: list[TraceStep], forest1: StructureForest, forest2: StructureForest) -> None:
    """Assert kind, stacking and ancestry constraints on a trace."""
    pairs = [(forest1.node(st.i), forest2.node(st.j)) for st in trace if st.op == "match"]
    for a, b in pairs:
        assert a.kind == b.kind, f"kind mismatch {a.label()} / {b.label()}"
        if a.kind == JUNCTION:
            assert a.chs.psi == b.chs.psi, f"stacking mismatch {a.label()} / {b.label()}"

    def ancestors(node):
        out = set()
        while node.parent is not None:
            node = node.parent
            out.add(node.index)
        return out

    for a, b in pairs:
        for c, d in pairs:
            if a is c:
                continue
            assert (a.index in ancestors(c)) == (b.index in ancestors(d)), "ancestry not preserved"
            if a.index < c.index and a.index not in ancestors(c) and c.index not in ancestors(a):
                # disjoint subtrees keep their left-to-right order
                assert b.index < d.index, "sibling order not preserved"


__all__ = [
    "AlignParams", "ScoreTable", "TraceStep", "FlatAlignment", "AlignmentResult",
    "fill_table", "best_cell", "backtrack", "flatten", "align", "trace_score", "check_trace",
    "NEG_INF",
]
