"""Reading, writing and checking RNA secondary structures.

Two on-disk formats are understood: bpseq (``index base partner`` lines) and
dot-bracket (a sequence line followed by a structure line, optionally preceded
by a ``>`` header).  Pseudoknotted pair sets can be reduced to a
maximum-cardinality nested subset with :func:`remove_pseudoknots`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

ALPHABET = "ACGUN"
BRACKETS = {"(": ")", "[": "]", "{": "}", "<": ">"}
_CLOSERS = {close: open_ for open_, close in BRACKETS.items()}


class StructureError(ValueError):
    """Raised for malformed structure text."""


class PseudoknotError(StructureError):
    """Crossing pairs where a nested structure is required."""


class NoPairsError(StructureError):
    """A structure without base pairs cannot be turned into a tree."""


@dataclass(frozen=True)
class SecondaryStructure:
    sequence: str
    pairs: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        pairs = tuple(sorted((min(i, j), max(i, j)) for i, j in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        n = len(self.sequence)
        seen: set[int] = set()
        for i, j in pairs:
            if i == j:
                raise StructureError(f"position {i} paired with itself")
            if i < 1 or j > n:
                raise StructureError(f"pair ({i}, {j}) outside 1..{n}")
            if i in seen or j in seen:
                raise StructureError(f"position in pair ({i}, {j}) is paired twice")
            seen.update((i, j))

    @property
    def length(self) -> int:
        return len(self.sequence)

    def partner_table(self) -> list[int]:
        """1-based partner list; index 0 is unused and 0 means unpaired."""
        table = [0] * (self.length + 1)
        for i, j in self.pairs:
            table[i] = j
            table[j] = i
        return table

    def crossing_pairs(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        return [
            (p, q)
            for a, p in enumerate(self.pairs)
            for q in self.pairs[a + 1:]
            if crosses(p, q)
        ]

    def is_nested(self) -> bool:
        stack: list[int] = []
        for i, j in _pair_events(self.pairs):
            if j > i:
                stack.append(j)
            else:
                if not stack or stack[-1] != i:
                    return False
                stack.pop()
        return True


def _pair_events(pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    # (position, partner) sorted by position
    events = []
    for i, j in pairs:
        events.append((i, j))
        events.append((j, i))
    events.sort()
    return events


def crosses(p: tuple[int, int], q: tuple[int, int]) -> bool:
    (i, j), (k, l) = sorted((p, q))
    return i < k < j < l


def normalize_base(ch: str) -> str:
    ch = ch.upper()
    if ch == "T":
        return "U"
    return ch if ch in "ACGU" else "N"


def normalize_sequence(seq: str) -> str:
    return "".join(normalize_base(c) for c in seq)


# -- bpseq -------------------------------------------------------------------

def parse_bpseq(text: str, name: str = "") -> SecondaryStructure:
    bases: list[str] = []
    partners: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise StructureError(f"line {lineno}: expected 'index base partner', got {raw!r}")
        try:
            index, partner = int(fields[0]), int(fields[2])
        except ValueError:
            raise StructureError(f"line {lineno}: non-integer index or partner in {raw!r}") from None
        if index != len(bases) + 1:
            raise StructureError(f"line {lineno}: index {index} is not consecutive (expected {len(bases) + 1})")
        bases.append(normalize_base(fields[1]))
        partners.append(partner)

    n = len(bases)
    pairs = []
    for i, j in enumerate(partners, 1):
        if j == 0:
            continue
        if j == i:
            raise StructureError(f"position {i} is paired with itself")
        if not 1 <= j <= n:
            raise StructureError(f"position {i}: partner {j} out of range 1..{n}")
        if partners[j - 1] != i:
            raise StructureError(
                f"asymmetric pairing: {i} pairs with {j} but {j} pairs with {partners[j - 1]}"
            )
        if i < j:
            pairs.append((i, j))
    return SecondaryStructure("".join(bases), tuple(pairs), name=name)


def emit_bpseq(ss: SecondaryStructure) -> str:
    table = ss.partner_table()
    return "".join(f"{i} {ss.sequence[i - 1]} {table[i]}\n" for i in range(1, ss.length + 1))


# -- dot-bracket -------------------------------------------------------------

def parse_dotbracket(seq_text: str, struct_text: str, name: str = "") -> SecondaryStructure:
    seq_text = seq_text.strip()
    struct_text = struct_text.strip()
    if len(seq_text) != len(struct_text):
        raise StructureError(
            f"sequence length {len(seq_text)} != structure length {len(struct_text)}"
        )
    stacks: dict[str, list[int]] = {b: [] for b in BRACKETS}
    pairs = []
    for pos, ch in enumerate(struct_text, 1):
        if ch in BRACKETS:
            stacks[ch].append(pos)
        elif ch in _CLOSERS:
            stack = stacks[_CLOSERS[ch]]
            if not stack:
                raise StructureError(f"unbalanced '{ch}' at position {pos}")
            pairs.append((stack.pop(), pos))
        elif ch not in ".-:,_":
            raise StructureError(f"unexpected structure character {ch!r} at position {pos}")
    for opener, stack in stacks.items():
        if stack:
            raise StructureError(f"unbalanced '{opener}' at position {stack[-1]}")
    return SecondaryStructure(normalize_sequence(seq_text), tuple(pairs), name=name)


def emit_dotbracket(ss: SecondaryStructure) -> str:
    if not ss.is_nested():
        raise PseudoknotError("structure has crossing pairs (pseudoknot); plain dot-bracket cannot represent it")
    chars = ["."] * ss.length
    for i, j in ss.pairs:
        chars[i - 1] = "("
        chars[j - 1] = ")"
    return "".join(chars)


def parse_dotbracket_text(text: str, name: str = "") -> SecondaryStructure:
    """Parse a two-line (or ``>``-headed) dot-bracket record."""
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith(">"):
            name = name or line[1:].strip()
            continue
        lines.append(line)
    if len(lines) != 2:
        raise StructureError(f"dot-bracket record needs a sequence and a structure line, got {len(lines)} lines")
    return parse_dotbracket(lines[0], lines[1], name=name)


def format_dotbracket_record(ss: SecondaryStructure) -> str:
    header = f">{ss.name}\n" if ss.name else ""
    return f"{header}{ss.sequence}\n{emit_dotbracket(ss)}\n"


def sniff_format(text: str) -> str:
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith(">"):
            return "dotbracket"
        return "bpseq" if line.split()[0].isdigit() else "dotbracket"
    raise StructureError("empty structure file")


def read_structure(path: str | Path, fmt: str = "auto") -> SecondaryStructure:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if fmt == "auto":
        fmt = sniff_format(text)
    if fmt == "bpseq":
        return parse_bpseq(text, name=path.stem)
    if fmt == "dotbracket":
        return parse_dotbracket_text(text, name=path.stem)
    raise ValueError(f"unknown structure format {fmt!r}")


# -- pseudoknots ---------------------------------------------------------------

def remove_pseudoknots(ss: SecondaryStructure) -> tuple[SecondaryStructure, frozenset[tuple[int, int]]]:
    """Keep a maximum-cardinality nested subset of ``ss.pairs``.

    Among optimal subsets the one retaining pairs with the smallest 5' index
    first is returned.  Nested input is returned unchanged.
    """
    if ss.is_nested():
        return ss, frozenset()

    # compress to paired positions only; unpaired positions never matter
    positions = sorted(p for pair in ss.pairs for p in pair)
    rank = {p: r for r, p in enumerate(positions)}
    m = len(positions)
    partner = np.full(m, -1, dtype=np.int64)
    for i, j in ss.pairs:
        partner[rank[i]] = rank[j]
        partner[rank[j]] = rank[i]

    # best[a, b] = max nested pairs using positions a..b (inclusive); row m is all zeros
    best = np.zeros((m + 1, m + 1), dtype=np.int32)
    for a in range(m - 1, -1, -1):
        row = best[a + 1].copy()
        k = partner[a]
        if k > a:
            inner = best[a + 1, k - 1] if k - 1 >= a + 1 else 0
            tail = np.zeros(m - k, dtype=np.int32)
            if k + 1 < m:
                tail = best[k + 1, k + 1:m]
            take = np.empty(m - k, dtype=np.int32)
            take[0] = 1 + inner
            take[1:] = 1 + inner + tail[: m - k - 1]
            row[k:m] = np.maximum(row[k:m], take)
        best[a] = row

    def value(a: int, b: int) -> int:
        return int(best[a, b]) if a <= b else 0

    kept = []
    todo = [(0, m - 1)]
    while todo:
        a, b = todo.pop()
        while a <= b:
            k = int(partner[a])
            if a < k <= b and 1 + value(a + 1, k - 1) + value(k + 1, b) == value(a, b):
                kept.append((positions[a], positions[k]))
                todo.append((k + 1, b))
                a, b = a + 1, k - 1
            else:
                a += 1

    kept_set = frozenset(kept)
    removed = frozenset(ss.pairs) - kept_set
    return SecondaryStructure(ss.sequence, tuple(kept_set), name=ss.name), removed


# -- validation ----------------------------------------------------------------

@dataclass
class Diagnostics:
    errors: list[tuple[str, tuple[int, int], str]] = field(default_factory=list)
    warnings: list[tuple[str, tuple[int, int], str]] = field(default_factory=list)
    pseudoknot_pairs: frozenset[tuple[int, int]] = frozenset()

    @property
    def ok(self) -> bool:
        return not self.errors

    def messages(self) -> list[str]:
        return [f"{sev}: {msg}" for sev, _, msg in self.errors + self.warnings]


def validate_for_alignment(ss: SecondaryStructure) -> Diagnostics:
    diag = Diagnostics()
    if not ss.pairs:
        diag.errors.append(("error", (1, ss.length), "no base pairs"))
    crossing = [] if ss.is_nested() else ss.crossing_pairs()
    if crossing:
        (i, j), (k, l) = crossing[0]
        diag.errors.append(
            ("error", (i, l), f"pseudoknot: pairs ({i}, {j}) and ({k}, {l}) cross"
             + (f" (+{len(crossing) - 1} more crossings)" if len(crossing) > 1 else ""))
        )
    for pos, base in enumerate(ss.sequence, 1):
        if base == "N":
            diag.warnings.append(("warning", (pos, pos), f"unknown base at position {pos} scored as N"))
    return diag


def require_alignable(ss: SecondaryStructure, label: str = "") -> Diagnostics:
    """Raise the specific error for the first validation failure; return the diagnostics otherwise."""
    diag = validate_for_alignment(ss)
    prefix = f"{label}: " if label else ""
    if not ss.pairs:
        raise NoPairsError(prefix + "no base pairs")
    if not diag.ok:
        raise PseudoknotError(prefix + "; ".join(msg for _, _, msg in diag.errors))
    return diag
