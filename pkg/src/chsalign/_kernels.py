"""Compiled global-alignment kernels over encoded node columns.

A column code is ``kind * 32 + symbol``.  Kind 0 is a base pair (symbol is a
5x5 pair index over ACGUN), kinds 1 and 2 are single bases on the 5' and 3'
strand of a helix, kind 3 is a loop base.  Columns of different kinds never
match; a pair column costs two gaps.
"""

import numpy as np
from numba import njit

KIND_SHIFT = 32
PAIR_KIND, FIVE_KIND, THREE_KIND, LOOP_KIND = 0, 1, 2, 3

# far below any reachable score, but safe from int64 overflow
_DISALLOWED = -(1 << 50)


@njit(cache=True, nogil=True)
def _column_gap(code, gap):
    if code // 32 == 0:
        return 2 * gap
    return gap


@njit(cache=True, nogil=True)
def _column_sub(c1, c2, single, pair):
    k1 = c1 // 32
    if k1 != c2 // 32:
        return _DISALLOWED
    if k1 == 0:
        return pair[c1 % 32, c2 % 32]
    return single[c1 % 32, c2 % 32]


@njit(cache=True, nogil=True)
def nw_score(a, b, single, pair, gap):
    n = b.shape[0]
    prev = np.empty(n + 1, dtype=np.int64)
    cur = np.empty(n + 1, dtype=np.int64)
    prev[0] = 0
    for j in range(1, n + 1):
        prev[j] = prev[j - 1] + _column_gap(b[j - 1], gap)
    for i in range(1, a.shape[0] + 1):
        ca = a[i - 1]
        ga = _column_gap(ca, gap)
        cur[0] = prev[0] + ga
        for j in range(1, n + 1):
            cb = b[j - 1]
            best = prev[j - 1] + _column_sub(ca, cb, single, pair)
            up = prev[j] + ga
            if up > best:
                best = up
            left = cur[j - 1] + _column_gap(cb, gap)
            if left > best:
                best = left
            cur[j] = best
        prev, cur = cur, prev
    return prev[n]


@njit(cache=True, nogil=True)
def nw_pairs(codes1, offsets1, codes2, offsets2, left, right, single, pair, gap):
    """Score unit ``left[k]`` of side 1 against unit ``right[k]`` of side 2."""
    out = np.empty(left.shape[0], dtype=np.int64)
    for k in range(left.shape[0]):
        u = left[k]
        v = right[k]
        out[k] = nw_score(codes1[offsets1[u]:offsets1[u + 1]],
                          codes2[offsets2[v]:offsets2[v + 1]], single, pair, gap)
    return out
