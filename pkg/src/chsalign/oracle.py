"""Exhaustive reference aligner for small forests.

Used only for verification.  It shares no code with the table-filling aligner
or the compiled node kernels: node contents are aligned by enumerating every
global alignment, tree alignments are enumerated as explicit event lists, and
all arithmetic is done on Fractions.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

from .scoring import ScoringScheme
from .tree_model import HAIRPIN, HELIX, JUNCTION, PAIR, StructureForest, TreeNode

MAX_NODES = 6
MAX_CONTENT = 10


class OracleLimitError(ValueError):
    pass


def _columns(node: TreeNode) -> list[list[tuple[str, str]]]:
    """Alignment units as (column kind, bases); junctions give one unit per segment."""
    if node.kind == HELIX:
        return [[(c.kind, c.bases) for c in node.columns]]
    if node.kind == HAIRPIN:
        return [[("loop", b) for b in node.loop_bases]]
    return [[("loop", b) for b in seg] for seg in node.segment_bases]


def enumerate_global_alignments(a, b):
    """Yield every global alignment of two column lists as a tuple of (x, y) with None for gaps."""
    if not a and not b:
        yield ()
        return
    if a and b:
        for rest in enumerate_global_alignments(a[1:], b[1:]):
            yield ((a[0], b[0]),) + rest
    if a:
        for rest in enumerate_global_alignments(a[1:], b):
            yield ((a[0], None),) + rest
    if b:
        for rest in enumerate_global_alignments(a, b[1:]):
            yield ((None, b[0]),) + rest


class _Scorer:
    def __init__(self, scheme: ScoringScheme):
        self.scheme = scheme
        self.gap = scheme.gap_value
        self.weight = scheme.weight_value

    def column_gap(self, col) -> Fraction:
        return self.gap * len(col[1])

    def column_pair(self, x, y):
        if x[0] != y[0]:
            return None
        if x[0] == PAIR:
            return self.scheme.pair_score(x[1], y[1])
        return self.scheme.single_score(x[1], y[1])

    def best_global(self, a, b) -> Fraction:
        best = None
        for aln in enumerate_global_alignments(tuple(a), tuple(b)):
            total = Fraction(0)
            for x, y in aln:
                if x is None:
                    total += self.column_gap(y)
                elif y is None:
                    total += self.column_gap(x)
                else:
                    s = self.column_pair(x, y)
                    if s is None:
                        break
                    total += s
            else:
                if best is None or total > best:
                    best = total
        return best


def brute_force_align(forest1: StructureForest, forest2: StructureForest, params) -> Fraction:
    """Best score over every admissible alignment rooted at every subtree pair (floored at 0)."""
    if len(forest1) > MAX_NODES or len(forest2) > MAX_NODES:
        raise OracleLimitError(f"oracle limited to {MAX_NODES} nodes per forest")
    scheme = params.scheme if hasattr(params, "scheme") else params
    scorer = _Scorer(scheme)

    for n1 in forest1.nodes:
        for n2 in forest2.nodes:
            if n1.kind == n2.kind and n1.size + n2.size > MAX_CONTENT:
                raise OracleLimitError("oracle limited to node contents of total length "
                                       f"{MAX_CONTENT}")

    @lru_cache(maxsize=None)
    def match_score(i: int, j: int):
        a, b = forest1.node(i), forest2.node(j)
        if a.kind != b.kind:
            return None
        if a.kind == JUNCTION:
            if (a.chs.degree, a.chs.stacked) != (b.chs.degree, b.chs.stacked):
                return None
            bonus = scorer.weight if a.chs.stacked else scorer.weight / 2
        else:
            bonus = Fraction(0)
        return sum((scorer.best_global(x, y) for x, y in zip(_columns(a), _columns(b))), bonus)

    def gap_score(node: TreeNode) -> Fraction:
        return scorer.gap * node.size

    def alignments(a: TreeNode, b: TreeNode):
        """Yield event lists; every rooted alignment may stop here (the empty list)."""
        yield []
        if a.kind == b.kind:
            if match_score(a.index, b.index) is None:
                return
            head = [("match", a.index, b.index)]
            if a.kind == HELIX:
                for rest in alignments(a.children[0], b.children[0]):
                    yield head + rest
            elif a.kind == JUNCTION:
                options = [list(alignments(x, y)) for x, y in zip(a.children, b.children)]
                for combo in itertools.product(*options):
                    yield head + [e for part in combo for e in part]
            else:
                yield head
            return
        # differing kinds: one side's root is dropped to gaps
        if b.kind == HELIX:
            for rest in alignments(a, b.children[0]):
                yield [("gap2", b.index)] + rest
        if a.kind == HELIX:
            for rest in alignments(a.children[0], b):
                yield [("gap1", a.index)] + rest
        if a.kind == JUNCTION:
            for child in a.children:
                for rest in alignments(child, b):
                    yield [("gap1", a.index)] + rest
        if b.kind == JUNCTION:
            for child in b.children:
                for rest in alignments(a, child):
                    yield [("gap2", b.index)] + rest

    def score(events) -> Fraction:
        total = Fraction(0)
        for ev in events:
            if ev[0] == "match":
                total += match_score(ev[1], ev[2])
            elif ev[0] == "gap1":
                total += gap_score(forest1.node(ev[1]))
            else:
                total += gap_score(forest2.node(ev[1]))
        return total

    best = Fraction(0)
    for a in forest1.nodes:
        for b in forest2.nodes:
            for events in alignments(a, b):
                _check_events(events, forest1, forest2)
                s = score(events)
                if s > best:
                    best = s
    return best


def _check_events(events, forest1, forest2) -> None:
    matches = [(forest1.node(e[1]), forest2.node(e[2])) for e in events if e[0] == "match"]
    for x, y in matches:
        assert x.kind == y.kind
        if x.kind == JUNCTION:
            assert x.chs.psi == y.chs.psi
    for (x, y), (u, v) in itertools.combinations(matches, 2):
        assert _is_ancestor(x, u) == _is_ancestor(y, v)
        assert _is_ancestor(u, x) == _is_ancestor(v, y)


def _is_ancestor(a: TreeNode, b: TreeNode) -> bool:
    node = b.parent
    while node is not None:
        if node is a:
            return True
        node = node.parent
    return False
