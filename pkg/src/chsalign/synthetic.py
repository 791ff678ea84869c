"""Random nested structures for benchmarks and property tests."""

from __future__ import annotations

import numpy as np

from .structure_io import SecondaryStructure, parse_dotbracket


def _stem_loop(length: int, rng: np.random.Generator) -> str:
    max_pairs = min(8, (length - 3) // 2)
    pairs = int(rng.integers(min(3, max_pairs), max_pairs + 1))
    inner = length - 2 * pairs
    return "(" * pairs + _loop(inner, rng) + ")" * pairs


def _loop(length: int, rng: np.random.Generator) -> str:
    if length < 14:
        return "." * length
    branches = int(rng.choice([1, 2, 3], p=[0.3, 0.45, 0.25]))
    gaps = [int(g) for g in rng.integers(0, 4, size=branches + 1)]
    room = length - sum(gaps)
    if room < 7 * branches:
        branches, gaps = 1, [0, 0]
        room = length
    free = room - 7 * branches
    cuts = np.sort(rng.integers(0, free + 1, size=branches - 1))
    extra = np.diff(np.concatenate(([0], cuts, [free])))
    out = "." * gaps[0]
    for b in range(branches):
        out += _stem_loop(7 + int(extra[b]), rng) + "." * gaps[b + 1]
    return out


def random_dotbracket(length: int, rng: np.random.Generator) -> str:
    """Dot-bracket string of exactly ``length`` nt with a handful of top-level stems."""
    out = ""
    remaining = length
    while remaining >= 20:
        tail = int(rng.integers(0, 4))
        span = int(rng.integers(20, min(remaining, 400) + 1)) if remaining > 20 else 20
        span = min(span, remaining - tail) if remaining - tail >= 20 else remaining
        out += "." * min(tail, remaining - span) + _stem_loop(span, rng)
        remaining = length - len(out)
    out += "." * remaining
    return out


def random_sequence(length: int, rng: np.random.Generator) -> str:
    return "".join(rng.choice(list("ACGU"), size=length))


def random_structure(length: int, rng: np.random.Generator) -> SecondaryStructure:
    return parse_dotbracket(random_sequence(length, rng), random_dotbracket(length, rng))
