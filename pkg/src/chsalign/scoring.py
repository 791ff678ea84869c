"""Substitution schemes and node-versus-node scores.

Scores are held internally as integers scaled by :data:`SCALE`, so sums are
exact and independent of platform floating point.  Public functions return
:class:`fractions.Fraction` values, or ``-math.inf`` for prohibited matches.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from ._kernels import FIVE_KIND, KIND_SHIFT, LOOP_KIND, PAIR_KIND, THREE_KIND
from .tree_model import FIVE, HAIRPIN, HELIX, JUNCTION, PAIR, THREE, TreeNode

SCALE = 200
NEG_INF = -math.inf

BASES = "ACGU"
PAIR_ORDER = [a + b for a in BASES for b in BASES]
_BASE_INDEX = {b: k for k, b in enumerate("ACGUN")}

RIBOSUM_SHA256 = "ec7345ba55e7613ab44f467005da05febd78dd9512ad6ac46660196a43b6a15a"


class SchemeError(ValueError):
    """Raised for an unreadable or inconsistent scoring scheme."""


def to_raw(value) -> int:
    scaled = Fraction(value) * SCALE
    if scaled.denominator != 1:
        raise SchemeError(f"score {value} is finer than 1/{SCALE}")
    return int(scaled)


def from_raw(raw) -> Fraction | float:
    if raw == NEG_INF:
        return NEG_INF
    return Fraction(int(raw), SCALE)


def format_score(value) -> str:
    if value == NEG_INF:
        return "-inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    text = f"{float(value):.4f}".rstrip("0")
    return text


@dataclass(frozen=True, eq=False)
class ScoringScheme:
    name: str
    single: np.ndarray  # 5x5 raw, ACGUN
    pair: np.ndarray  # 25x25 raw, index 5 * first + second
    gap: int  # raw, per nucleotide
    weight: int  # raw
    symmetric: bool = True
    source_sha256: str = field(default="", compare=False)

    def with_params(self, gap=None, weight=None) -> "ScoringScheme":
        changes = {}
        if gap is not None:
            changes["gap"] = to_raw(gap)
        if weight is not None:
            changes["weight"] = to_raw(weight)
        scheme = replace(self, **changes)
        scheme.check()
        return scheme

    def check(self) -> None:
        if self.gap >= 0:
            raise SchemeError("gap penalty must be negative")
        if self.weight < 0:
            raise SchemeError("junction weight must be non-negative")
        if self.weight % 2:
            raise SchemeError(f"junction weight must be a multiple of {Fraction(2, SCALE)}")
        if self.symmetric:
            if not (np.array_equal(self.single, self.single.T) and np.array_equal(self.pair, self.pair.T)):
                raise SchemeError(f"scheme {self.name!r} is declared symmetric but its matrices are not")

    @property
    def gap_value(self) -> Fraction:
        return from_raw(self.gap)

    @property
    def weight_value(self) -> Fraction:
        return from_raw(self.weight)

    def single_score(self, a: str, b: str) -> Fraction:
        return from_raw(self.single[_BASE_INDEX[a], _BASE_INDEX[b]])

    def pair_score(self, p: str, q: str) -> Fraction:
        return from_raw(self.pair[_pair_index(p), _pair_index(q)])


def _pair_index(p: str) -> int:
    return 5 * _BASE_INDEX[p[0]] + _BASE_INDEX[p[1]]


def _extend_with_n(single4: list[list[Fraction]], pair16: list[list[Fraction]]):
    """Add N rows/columns scoring as the worst substitution over its expansions."""

    def expand(ch):
        return BASES if ch == "N" else ch

    single = np.zeros((5, 5), dtype=np.int64)
    for a, ca in enumerate("ACGUN"):
        for b, cb in enumerate("ACGUN"):
            single[a, b] = min(to_raw(single4[BASES.index(x)][BASES.index(y)])
                               for x in expand(ca) for y in expand(cb))
    pair = np.zeros((25, 25), dtype=np.int64)
    labels = [a + b for a in "ACGUN" for b in "ACGUN"]
    for p, lp in enumerate(labels):
        left = [x + y for x in expand(lp[0]) for y in expand(lp[1])]
        for q, lq in enumerate(labels):
            right = [x + y for x in expand(lq[0]) for y in expand(lq[1])]
            pair[p, q] = min(to_raw(pair16[PAIR_ORDER.index(x)][PAIR_ORDER.index(y)])
                             for x in left for y in right)
    return single, pair


def build_scheme(name, single4, pair16, gap, weight, symmetric=True, sha256="") -> ScoringScheme:
    single, pair = _extend_with_n(single4, pair16)
    scheme = ScoringScheme(name, single, pair, to_raw(gap), to_raw(weight), symmetric, sha256)
    scheme.check()
    return scheme


def unit_scheme() -> ScoringScheme:
    single4 = [[1 if a == b else -1 for b in range(4)] for a in range(4)]
    pair16 = [[2 if p == q else -2 for q in range(16)] for p in range(16)]
    return build_scheme("unit", single4, pair16, -1, 100)


def parse_scheme(text: str, name: str = "custom", sha256: str = "") -> ScoringScheme:
    """Parse the plain-text scheme format (see README)."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    single4 = pair16 = None
    gap, weight, symmetric = Fraction(-1), Fraction(100), True
    k = 0

    def read_rows(count, width, label):
        nonlocal k
        rows = []
        for _ in range(count):
            if k >= len(lines):
                raise SchemeError(f"{label} matrix ends after {len(rows)} rows, expected {count}")
            fields = lines[k].split()
            if len(fields) != width:
                raise SchemeError(f"{label} row {len(rows) + 1} has {len(fields)} scores, expected {width}")
            try:
                rows.append([Fraction(f) for f in fields])
            except ValueError:
                raise SchemeError(f"{label} row {len(rows) + 1} is not numeric: {lines[k]!r}") from None
            k += 1
        return rows

    while k < len(lines):
        head, *rest = lines[k].split()
        k += 1
        if head == "single" and not rest:
            single4 = read_rows(4, 4, "single")
        elif head == "pair" and not rest:
            pair16 = read_rows(16, 16, "pair")
        elif head in ("gap", "weight", "name", "symmetric") and len(rest) == 1:
            value = rest[0]
            try:
                if head == "gap":
                    gap = Fraction(value)
                elif head == "weight":
                    weight = Fraction(value)
                elif head == "name":
                    name = value
                else:
                    if value not in ("yes", "no"):
                        raise SchemeError(f"symmetric must be yes or no, got {value!r}")
                    symmetric = value == "yes"
            except ValueError:
                raise SchemeError(f"bad {head} value {value!r}") from None
        else:
            raise SchemeError(f"unexpected line {lines[k - 1]!r}")
    if single4 is None or pair16 is None:
        raise SchemeError("scheme needs both a 'single' and a 'pair' matrix")
    return build_scheme(name, single4, pair16, gap, weight, symmetric, sha256)


def bundled_scheme_path(name: str = "ribosum85-60") -> Path:
    return Path(str(resources.files("chsalign") / "data" / f"{name}.mat"))


def load_scheme(source: str | os.PathLike = "ribosum85-60") -> ScoringScheme:
    """Load ``unit``, a bundled or ``$CHSALIGN_SCHEME_DIR`` scheme by name, or a file path."""
    if source == "unit":
        return unit_scheme()
    candidates = [Path(source)]
    scheme_dir = os.environ.get("CHSALIGN_SCHEME_DIR")
    if scheme_dir:
        candidates += [Path(scheme_dir) / f"{source}", Path(scheme_dir) / f"{source}.mat"]
    candidates.append(bundled_scheme_path(str(source)))
    for path in candidates:
        if path.is_file():
            data = path.read_bytes()
            return parse_scheme(data.decode("utf-8"), name=path.stem,
                                sha256=hashlib.sha256(data).hexdigest())
    raise SchemeError(f"no scoring scheme named or located at {source!r}")


# -- node contents -------------------------------------------------------------

_KIND_CODE = {PAIR: PAIR_KIND, FIVE: FIVE_KIND, THREE: THREE_KIND}


def helix_codes(node: TreeNode) -> list[int]:
    codes = []
    for col in node.columns:
        kind = _KIND_CODE[col.kind]
        sym = _pair_index(col.bases) if kind == PAIR_KIND else _BASE_INDEX[col.bases]
        codes.append(kind * KIND_SHIFT + sym)
    return codes


def loop_codes(bases: str) -> list[int]:
    return [LOOP_KIND * KIND_SHIFT + _BASE_INDEX[b] for b in bases]


def node_units(node: TreeNode) -> list[list[int]]:
    """Encoded alignment units of a node: one per helix / hairpin, one per junction segment."""
    if node.kind == HELIX:
        return [helix_codes(node)]
    if node.kind == HAIRPIN:
        return [loop_codes(node.loop_bases)]
    return [loop_codes(s) for s in node.segment_bases]


def _unit_items(node: TreeNode):
    """(positions, bases) per column, in the same order as ``node_units``."""
    if node.kind == HELIX:
        return [[(c.positions, c.bases) for c in node.columns]]
    if node.kind == HAIRPIN:
        return [[((p,), b) for p, b in zip(node.loop, node.loop_bases)]]
    return [[((p,), b) for p, b in zip(seg, bases)] for seg, bases in zip(node.segments, node.segment_bases)]


# -- alignment -----------------------------------------------------------------

@dataclass(frozen=True)
class AlignedUnit:
    op: str  # "match", "gap1" (unit of side 1 against gaps) or "gap2"
    pos1: tuple[int, ...]
    pos2: tuple[int, ...]
    bases1: str
    bases2: str
    score: Fraction


@dataclass
class NodeAlignment:
    score: Fraction | float
    units: list[AlignedUnit] = field(default_factory=list)


def _sub_raw(c1: int, c2: int, scheme: ScoringScheme):
    k1, k2 = divmod(c1, KIND_SHIFT), divmod(c2, KIND_SHIFT)
    if k1[0] != k2[0]:
        return None
    if k1[0] == PAIR_KIND:
        return int(scheme.pair[k1[1], k2[1]])
    return int(scheme.single[k1[1], k2[1]])


def _gap_raw(code: int, scheme: ScoringScheme) -> int:
    return scheme.gap * (2 if code // KIND_SHIFT == PAIR_KIND else 1)


def align_codes(a: list[int], b: list[int], scheme: ScoringScheme) -> tuple[int, list[tuple]]:
    """Global alignment with traceback; ties prefer diagonal, then up, then left.

    Returns the raw score and ops ``("M", i, j)``, ``("D", i)`` (a[i] to gap)
    or ``("I", j)`` (b[j] to gap), 0-based.
    """
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for j in range(1, n + 1):
        dp[0][j] = dp[0][j - 1] + _gap_raw(b[j - 1], scheme)
    for i in range(1, m + 1):
        ga = _gap_raw(a[i - 1], scheme)
        row, prev = dp[i], dp[i - 1]
        row[0] = prev[0] + ga
        for j in range(1, n + 1):
            best = prev[j] + ga
            sub = _sub_raw(a[i - 1], b[j - 1], scheme)
            if sub is not None and prev[j - 1] + sub > best:
                best = prev[j - 1] + sub
            left = row[j - 1] + _gap_raw(b[j - 1], scheme)
            if left > best:
                best = left
            row[j] = best
    ops = []
    i, j = m, n
    while i or j:
        if i and j:
            sub = _sub_raw(a[i - 1], b[j - 1], scheme)
            if sub is not None and dp[i - 1][j - 1] + sub == dp[i][j]:
                ops.append(("M", i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if i and dp[i - 1][j] + _gap_raw(a[i - 1], scheme) == dp[i][j]:
            ops.append(("D", i - 1))
            i -= 1
        else:
            ops.append(("I", j - 1))
            j -= 1
    ops.reverse()
    return dp[m][n], ops


def _units_from_ops(ops, a, b, items1, items2, scheme) -> list[AlignedUnit]:
    units = []
    for op in ops:
        if op[0] == "M":
            (p1, b1), (p2, b2) = items1[op[1]], items2[op[2]]
            units.append(AlignedUnit("match", p1, p2, b1, b2, from_raw(_sub_raw(a[op[1]], b[op[2]], scheme))))
        elif op[0] == "D":
            p1, b1 = items1[op[1]]
            units.append(AlignedUnit("gap1", p1, (), b1, "", from_raw(_gap_raw(a[op[1]], scheme))))
        else:
            p2, b2 = items2[op[1]]
            units.append(AlignedUnit("gap2", (), p2, "", b2, from_raw(_gap_raw(b[op[1]], scheme))))
    return units


def _items_for_bases(bases: str):
    return [((k + 1,), ch) for k, ch in enumerate(bases)]


def align_segment(a: str, b: str, scheme: ScoringScheme) -> NodeAlignment:
    """Global alignment of two unpaired base strings (positions reported 1-based within each)."""
    ca, cb = loop_codes(a), loop_codes(b)
    raw, ops = align_codes(ca, cb, scheme)
    return NodeAlignment(from_raw(raw), _units_from_ops(ops, ca, cb, _items_for_bases(a), _items_for_bases(b), scheme))


def _align_nodes(n1: TreeNode, n2: TreeNode, scheme: ScoringScheme) -> tuple[int, list[AlignedUnit]]:
    total, units = 0, []
    for a, b, it1, it2 in zip(node_units(n1), node_units(n2), _unit_items(n1), _unit_items(n2)):
        raw, ops = align_codes(a, b, scheme)
        total += raw
        units += _units_from_ops(ops, a, b, it1, it2, scheme)
    return total, units


def gamma_helix(h1: TreeNode, h2: TreeNode, scheme: ScoringScheme) -> NodeAlignment:
    if h1.kind != HELIX or h2.kind != HELIX:
        raise TypeError("gamma_helix needs two helix nodes")
    raw, units = _align_nodes(h1, h2, scheme)
    return NodeAlignment(from_raw(raw), units)


def gamma_junction(j1: TreeNode, j2: TreeNode, scheme: ScoringScheme) -> NodeAlignment:
    """The segment-wise score ``s`` of two junctions (without the stacking weight)."""
    if j1.kind != JUNCTION or j2.kind != JUNCTION:
        raise TypeError("gamma_junction needs two junction nodes")
    if len(j1.segments) != len(j2.segments):
        raise ValueError(f"junction degree mismatch: {len(j1.segments)} vs {len(j2.segments)}")
    raw, units = _align_nodes(j1, j2, scheme)
    return NodeAlignment(from_raw(raw), units)


def psi_equal(j1: TreeNode, j2: TreeNode) -> bool:
    if j1.chs is None or j2.chs is None:
        raise ValueError("junction without CHS annotation")
    return j1.chs.psi == j2.chs.psi


def junction_bonus_raw(j1: TreeNode, j2: TreeNode, scheme: ScoringScheme) -> int:
    """w when both junctions carry stacking, w/2 when neither does (Ψ already equal)."""
    return scheme.weight if j1.chs.stacked else scheme.weight // 2


def gamma_alignment(n1: TreeNode | None, n2: TreeNode | None, scheme: ScoringScheme) -> NodeAlignment:
    """Full node alignment including gap-only alignments for the empty node ``None``."""
    if n1 is None and n2 is None:
        raise ValueError("cannot align two empty nodes")
    if n1 is None or n2 is None:
        node = n1 if n1 is not None else n2
        units = []
        for codes, items in zip(node_units(node), _unit_items(node)):
            for code, (pos, bases) in zip(codes, items):
                score = from_raw(_gap_raw(code, scheme))
                if n1 is not None:
                    units.append(AlignedUnit("gap1", pos, (), bases, "", score))
                else:
                    units.append(AlignedUnit("gap2", (), pos, "", bases, score))
        return NodeAlignment(from_raw(node.size * scheme.gap), units)
    if n1.kind != n2.kind:
        return NodeAlignment(NEG_INF)
    if n1.kind == JUNCTION:
        if not psi_equal(n1, n2):
            return NodeAlignment(NEG_INF)
        raw, units = _align_nodes(n1, n2, scheme)
        return NodeAlignment(from_raw(raw + junction_bonus_raw(n1, n2, scheme)), units)
    raw, units = _align_nodes(n1, n2, scheme)
    return NodeAlignment(from_raw(raw), units)


def gamma(n1: TreeNode | None, n2: TreeNode | None, scheme: ScoringScheme):
    return gamma_alignment(n1, n2, scheme).score


def gamma_gap(node: TreeNode, scheme: ScoringScheme) -> Fraction:
    return from_raw(node.size * scheme.gap)
