"""Ordered labeled trees built from nested secondary structures.

Each node is a helix, a junction (multi-branch loop with three or more
branches) or a hairpin loop.  Internal loops and bulges stay inside the helix
that carries them, stored as single-strand columns.  Nodes are numbered by a
left-to-right post-order traversal starting at 1.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Iterator

from .structure_io import SecondaryStructure, require_alignable

log = logging.getLogger(__name__)

HELIX = "helix"
JUNCTION = "junction"
HAIRPIN = "hairpin"

# helix column kinds
PAIR = "pair"
FIVE = "5'"
THREE = "3'"

MAX_EXPECTED_DEGREE = 12


class AnnotationError(ValueError):
    """Raised for a malformed or inconsistent CHS annotation."""


@dataclass(frozen=True)
class HelixColumn:
    kind: str  # PAIR, FIVE or THREE
    positions: tuple[int, ...]
    bases: str

    @property
    def size(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class ChsStatus:
    """Coaxial stacking state of one junction.

    ``stacked`` holds branch-index pairs ``(x, y)`` with ``x < y``; branch 1 is
    the entry helix and 2..n the child helices in 5' to 3' order.
    """

    degree: int
    stacked: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        used: set[int] = set()
        for x, y in self.stacked:
            if not 1 <= x < y <= self.degree:
                raise AnnotationError(f"stacked pair H{x}H{y} invalid for a {self.degree}-way junction")
            if x in used or y in used:
                raise AnnotationError(f"branch appears in more than one stacked pair: {self.tokens()}")
            used.update((x, y))

    @property
    def psi(self) -> tuple[int, frozenset[tuple[int, int]]]:
        return self.degree, self.stacked

    @property
    def code(self) -> int | str:
        if not self.stacked:
            return 0
        if self.degree == 3:
            (pair,) = self.stacked
            return {(1, 2): 1, (2, 3): 2, (1, 3): 3}[pair]
        return self.tokens()

    def tokens(self) -> str:
        if not self.stacked:
            return "none"
        return ",".join(f"H{x}H{y}" for x, y in sorted(self.stacked))

    @classmethod
    def parse(cls, degree: int, status: str) -> "ChsStatus":
        status = status.strip()
        if status == "none":
            return cls(degree)
        stacked = set()
        for token in status.split(","):
            m = _TOKEN_RE.fullmatch(token.strip())
            if not m:
                raise AnnotationError(f"malformed stacking token {token.strip()!r}")
            x, y = int(m.group(1)), int(m.group(2))
            if x >= y:
                raise AnnotationError(f"stacking token {token.strip()!r} must have x < y")
            if y > degree:
                raise AnnotationError(f"branch index {y} exceeds junction degree {degree}")
            if (x, y) in stacked:
                raise AnnotationError(f"duplicate stacking token H{x}H{y}")
            stacked.add((x, y))
        return cls(degree, frozenset(stacked))


_TOKEN_RE = re.compile(r"H(\d+)H(\d+)")
_LINE_RE = re.compile(r"junction\s+(\d+)\s+(\d+)-way\s+(\S(?:.*\S)?)")


@dataclass(eq=False)
class TreeNode:
    kind: str
    index: int = 0
    children: list["TreeNode"] = field(default_factory=list)
    parent: "TreeNode | None" = field(default=None, repr=False)
    # helix
    columns: tuple[HelixColumn, ...] = ()
    # hairpin: enclosed loop; junction: one tuple per loop segment
    loop: tuple[int, ...] = ()
    loop_bases: str = ""
    segments: tuple[tuple[int, ...], ...] = ()
    segment_bases: tuple[str, ...] = ()
    closing_pair: tuple[int, int] | None = None  # hairpin closing pair / junction entry pair
    branch_pairs: tuple[tuple[int, int], ...] = ()  # junction: entry pair then child entry pairs
    chs: ChsStatus | None = None

    @property
    def degree(self) -> int:
        """Number of children (an n-way junction has n - 1)."""
        return len(self.children)

    @property
    def branches(self) -> int:
        return len(self.children) + 1

    @property
    def size(self) -> int:
        """Nucleotide count |t|."""
        if self.kind == HELIX:
            return sum(c.size for c in self.columns)
        if self.kind == HAIRPIN:
            return len(self.loop)
        return sum(len(s) for s in self.segments)

    def positions(self) -> list[int]:
        if self.kind == HELIX:
            return sorted(p for c in self.columns for p in c.positions)
        if self.kind == HAIRPIN:
            return list(self.loop)
        return [p for s in self.segments for p in s]

    def label(self) -> str:
        return {HELIX: "H", JUNCTION: "J", HAIRPIN: "P"}[self.kind] + str(self.index)

    def __repr__(self) -> str:
        return f"TreeNode({self.label()}, size={self.size}, children={[c.index for c in self.children]})"


@dataclass(eq=False)
class StructureForest:
    structure: SecondaryStructure
    roots: list[TreeNode]
    nodes: list[TreeNode]  # nodes[k] has index k + 1

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, index: int) -> TreeNode:
        return self.nodes[index - 1]

    def junctions(self) -> list[TreeNode]:
        """Junctions ordered by the 5' position of their entry pair."""
        found = [n for n in self.nodes if n.kind == JUNCTION]
        return sorted(found, key=lambda n: n.closing_pair[0])

    def is_annotated(self) -> bool:
        return all(n.chs is not None for n in self.nodes if n.kind == JUNCTION)

    def owner_map(self) -> dict[int, tuple[TreeNode, str]]:
        """Map each covered nucleotide to (node, role) where role names its column type."""
        owners: dict[int, tuple[TreeNode, str]] = {}
        for node in self.nodes:
            if node.kind == HELIX:
                for col in node.columns:
                    for p in col.positions:
                        owners[p] = (node, col.kind)
            elif node.kind == HAIRPIN:
                for p in node.loop:
                    owners[p] = (node, "loop")
            else:
                for seg in node.segments:
                    for p in seg:
                        owners[p] = (node, "loop")
        return owners


# -- construction --------------------------------------------------------------

def _enclosed_children(partner: list[int], i: int, j: int) -> list[tuple[int, int]]:
    """Top-level pairs strictly inside (i, j)."""
    kids = []
    p = i + 1
    while p < j:
        q = partner[p]
        if q > p:
            kids.append((p, q))
            p = q + 1
        else:
            p += 1
    return kids


def _build_helix(ss: SecondaryStructure, partner: list[int], i: int, j: int) -> TreeNode:
    seq = ss.sequence
    columns: list[HelixColumn] = []
    while True:
        columns.append(HelixColumn(PAIR, (i, j), seq[i - 1] + seq[j - 1]))
        kids = _enclosed_children(partner, i, j)
        if len(kids) == 1:
            k, l = kids[0]
            for p in range(i + 1, k):
                columns.append(HelixColumn(FIVE, (p,), seq[p - 1]))
            for p in range(j - 1, l, -1):
                columns.append(HelixColumn(THREE, (p,), seq[p - 1]))
            i, j = k, l
            continue
        break

    helix = TreeNode(HELIX, columns=tuple(columns))
    if not kids:
        loop = tuple(range(i + 1, j))
        child = TreeNode(HAIRPIN, loop=loop, loop_bases="".join(seq[p - 1] for p in loop),
                         closing_pair=(i, j))
    else:
        bounds = [(i, j)] + kids
        segments = []
        prev_end = i
        for k, l in kids:
            segments.append(tuple(range(prev_end + 1, k)))
            prev_end = l
        segments.append(tuple(range(prev_end + 1, j)))
        child = TreeNode(
            JUNCTION,
            segments=tuple(segments),
            segment_bases=tuple("".join(seq[p - 1] for p in s) for s in segments),
            closing_pair=(i, j),
            branch_pairs=tuple(bounds),
        )
        for k, l in kids:
            sub = _build_helix(ss, partner, k, l)
            sub.parent = child
            child.children.append(sub)
        if child.branches > MAX_EXPECTED_DEGREE:
            log.warning("junction at %d-%d has %d branches (more than %d)", i, j, child.branches,
                        MAX_EXPECTED_DEGREE)
    child.parent = helix
    helix.children.append(child)
    return helix


def decompose(ss: SecondaryStructure) -> list[TreeNode]:
    """Split a validated structure into top-level helix subtrees, 5' to 3'."""
    require_alignable(ss)
    partner = ss.partner_table()
    return [_build_helix(ss, partner, i, j) for i, j in _enclosed_children(partner, 0, ss.length + 1)]


def _postorder(node: TreeNode) -> Iterator[TreeNode]:
    stack: list[tuple[TreeNode, bool]] = [(node, False)]
    while stack:
        cur, expanded = stack.pop()
        if expanded:
            yield cur
        else:
            stack.append((cur, True))
            for child in reversed(cur.children):
                stack.append((child, False))


def build_forest(elements: list[TreeNode], structure: SecondaryStructure) -> StructureForest:
    nodes: list[TreeNode] = []
    for root in elements:
        for node in _postorder(root):
            nodes.append(node)
            node.index = len(nodes)
    forest = StructureForest(structure, list(elements), nodes)
    check_grammar(forest)
    return forest


def forest_from_structure(ss: SecondaryStructure) -> StructureForest:
    return build_forest(decompose(ss), ss)


def check_grammar(forest: StructureForest) -> None:
    for node in forest.nodes:
        kinds = [c.kind for c in node.children]
        if node.kind == HELIX:
            ok = len(kinds) == 1 and kinds[0] in (JUNCTION, HAIRPIN)
        elif node.kind == JUNCTION:
            ok = len(kinds) >= 2 and all(k == HELIX for k in kinds) and node.parent is not None \
                and node.parent.kind == HELIX
        else:
            ok = not kinds
        if not ok:
            raise AssertionError(f"tree grammar violated at {node!r}")
        for child in node.children:
            if child.index >= node.index:
                raise AssertionError(f"post-order violated: {child!r} under {node!r}")


# -- CHS annotation ------------------------------------------------------------

def parse_annotations(text: str, forest: StructureForest) -> StructureForest:
    """Attach ``ChsStatus`` to every junction of a copy of ``forest``.

    Lines read ``junction <ordinal> <n>-way <status>`` where status is
    ``none`` or comma-separated ``H<x>H<y>`` tokens; ``#`` starts a comment.
    """
    junctions = forest.junctions()
    statuses: dict[int, ChsStatus] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.fullmatch(line)
        if not m:
            raise AnnotationError(f"line {lineno}: cannot parse {raw.strip()!r}")
        ordinal, degree, status = int(m.group(1)), int(m.group(2)), m.group(3)
        if not 1 <= ordinal <= len(junctions):
            raise AnnotationError(
                f"line {lineno}: junction {ordinal} out of range (structure has {len(junctions)})"
            )
        if ordinal in statuses:
            raise AnnotationError(f"line {lineno}: junction {ordinal} annotated twice")
        actual = junctions[ordinal - 1].branches
        if degree != actual:
            raise AnnotationError(
                f"line {lineno}: junction {ordinal} is {actual}-way, annotation says {degree}-way"
            )
        try:
            statuses[ordinal] = ChsStatus.parse(degree, status)
        except AnnotationError as exc:
            raise AnnotationError(f"line {lineno}: {exc}") from None
    for ordinal, junction in enumerate(junctions, 1):
        if ordinal not in statuses:
            log.warning("junction %d not annotated; assuming no coaxial stacking", ordinal)
            statuses[ordinal] = ChsStatus(junction.branches)
    return annotate(forest, statuses)


def annotate(forest: StructureForest, statuses: dict[int, ChsStatus]) -> StructureForest:
    """Return a copy of ``forest`` with statuses keyed by junction ordinal attached."""
    clone = _clone(forest)
    for ordinal, junction in enumerate(clone.junctions(), 1):
        status = statuses.get(ordinal, ChsStatus(junction.branches))
        if status.degree != junction.branches:
            raise AnnotationError(
                f"junction {ordinal} is {junction.branches}-way, status given for {status.degree}-way"
            )
        junction.chs = status
    return clone


def _clone(forest: StructureForest) -> StructureForest:
    fresh = [replace(node, children=[], parent=None) for node in forest.nodes]
    for old, new in zip(forest.nodes, fresh):
        new.children = [fresh[c.index - 1] for c in old.children]
        for child in new.children:
            child.parent = new
    roots = [fresh[r.index - 1] for r in forest.roots]
    return StructureForest(forest.structure, roots, fresh)


def format_annotations(forest: StructureForest, header: str = "") -> str:
    lines = [f"# {header}" if header else "# chsalign junction annotations",
             "# junction <ordinal> <n>-way <none | HxHy[,HxHy...]>"]
    for ordinal, junction in enumerate(forest.junctions(), 1):
        status = junction.chs or ChsStatus(junction.branches)
        lines.append(f"junction {ordinal} {junction.branches}-way {status.tokens()}")
    return "\n".join(lines) + "\n"


def predict_chs_baseline(forest: StructureForest, policy: str = "flush") -> dict[int, ChsStatus]:
    """Heuristic stand-in for a real stacking predictor.

    ``none`` leaves every junction unstacked.  ``flush`` stacks the two
    sequence-adjacent branches separated by the shortest loop segment, if
    that segment has at most one nucleotide (ties go to the lowest segment).
    """
    if policy not in ("none", "flush"):
        raise ValueError(f"unknown predictor policy {policy!r}")
    statuses = {}
    for ordinal, junction in enumerate(forest.junctions(), 1):
        n = junction.branches
        status = ChsStatus(n)
        if policy == "flush":
            lengths = [len(s) for s in junction.segments]
            k = min(range(n), key=lambda idx: (lengths[idx], idx))
            if lengths[k] <= 1:
                x, y = k + 1, (k + 1) % n + 1
                status = ChsStatus(n, frozenset({(min(x, y), max(x, y))}))
        statuses[ordinal] = status
    return statuses


def psi(node: TreeNode) -> tuple[int, frozenset[tuple[int, int]]]:
    if node.kind != JUNCTION:
        raise TypeError(f"psi is only defined for junctions, got {node.kind}")
    if node.chs is None:
        raise AnnotationError(f"junction {node.label()} has no CHS annotation")
    return node.chs.psi


def pi(node: TreeNode) -> int | str:
    if node.kind != JUNCTION:
        raise TypeError(f"pi is only defined for junctions, got {node.kind}")
    if node.chs is None:
        raise AnnotationError(f"junction {node.label()} has no CHS annotation")
    return node.chs.code
