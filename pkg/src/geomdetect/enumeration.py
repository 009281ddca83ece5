"""Exhaustive enumeration over the ``2^(n d)`` membership patterns of ``n`` subsets of ``[d]``.

Vertex ``i`` owns bits ``i*d .. i*d + d - 1`` of the pattern integer.  A
pattern with ``k`` set bits has probability ``delta^k (1 - delta)^(nd - k)``.
Graph structure does not depend on ``delta``, so patterns are reduced once to
per-pattern summaries and reweighted for each ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

MAX_PATTERN_BITS = 20
_CHUNK = 1 << 16


def check_enumeration_size(n: int, d: int) -> None:
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be positive, got n={n}, d={d}")
    if n * d > MAX_PATTERN_BITS:
        raise ValueError(
            f"enumeration over 2^(n*d) = 2^{n * d} patterns exceeds the cap 2^{MAX_PATTERN_BITS}; "
            "reduce n or d"
        )


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def _chunks(n: int, d: int):
    """Yield ``(popcount, rows)`` where ``rows[i]`` is the adjacency bitset of vertex ``i``."""
    total = 1 << (n * d)
    low = np.uint32((1 << d) - 1)
    for start in range(0, total, _CHUNK):
        pat = np.arange(start, min(total, start + _CHUNK), dtype=np.uint32)
        masks = [(pat >> np.uint32(i * d)) & low for i in range(n)]
        yield _popcount(pat), masks


def _rows_from_masks(masks: list[np.ndarray], tau: int) -> list[np.ndarray]:
    n = len(masks)
    rows = [np.zeros_like(masks[0]) for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            common = masks[i] & masks[j]
            hit = common != 0 if tau == 1 else _popcount(common) >= tau
            rows[i] |= hit.astype(np.uint32) << np.uint32(j)
            rows[j] |= hit.astype(np.uint32) << np.uint32(i)
    return rows


# edges whose indicators feed the overlap products tau_123, tau_124, tau_145
_SMALL_EDGES = ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (0, 4), (3, 4))


@lru_cache(maxsize=64)
def _summary_table(n: int, d: int, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Unique rows of ``(k, T, P2, m, small-edge bits)`` and their multiplicities."""
    check_enumeration_size(n, d)
    parts = []
    for k, masks in _chunks(n, d):
        rows = _rows_from_masks(masks, tau)
        tri = np.zeros_like(k)
        for i in range(n):
            for j in range(i + 1, n):
                eij = (rows[i] >> np.uint32(j)) & np.uint32(1)
                above = np.uint32(((1 << n) - 1) & ~((1 << (j + 1)) - 1))
                tri += eij.astype(np.int64) * _popcount(rows[i] & rows[j] & above)
        deg = [_popcount(r) for r in rows]
        p2 = sum(x * (x - 1) // 2 for x in deg)
        m = sum(deg) // 2
        small = np.zeros_like(k)
        for b, (i, j) in enumerate(_SMALL_EDGES):
            if j < n:
                small |= ((rows[i] >> np.uint32(j)) & np.uint32(1)).astype(np.int64) << b
        # pack into one int64: k (5 bits), T (11), P2 (12), m (8), edges (7)
        parts.append(k | tri << 5 | p2 << 16 | m << 28 | small << 36)
    packed, counts = np.unique(np.concatenate(parts), return_counts=True)
    fields = [(0, 5), (5, 11), (16, 12), (28, 8), (36, 7)]
    uniq = np.stack([(packed >> off) & ((1 << width) - 1) for off, width in fields], axis=1)
    return uniq, counts


@dataclass(frozen=True)
class EnumeratedMoments:
    """Exact expectations obtained by summing over every membership pattern."""

    n: int
    d: int
    delta: float
    tau: int
    p: float
    mean_signed: float
    second_signed: float
    mean_plain: float
    tau_mean: float
    tau_second: float
    tau_shared_edge: float | None
    tau_shared_vertex: float | None

    @property
    def var_signed(self) -> float:
        return self.second_signed - self.mean_signed**2


def _weights(k: np.ndarray, nd: int, delta: float) -> np.ndarray:
    if delta == 0.0:
        return (k == 0).astype(float)
    if delta == 1.0:
        return (k == nd).astype(float)
    return np.exp(k * math.log(delta) + (nd - k) * math.log1p(-delta))


def _wsum(w: np.ndarray, counts: np.ndarray, values: np.ndarray) -> float:
    return math.fsum((w * counts * values).tolist())


def enumerate_rig_moments(n: int, d: int, delta: float, tau: int = 1, p: float | None = None) -> EnumeratedMoments:
    """Brute-force triangle statistics of the intersection graph.

    ``p`` is the centering used in the signed statistic; by default it is the
    exact edge marginal, itself obtained by enumeration.
    """
    uniq, counts = _summary_table(n, d, tau)
    k, tri, p2, m, small = (uniq[:, c] for c in range(5))
    w = _weights(k, n * d, delta)
    total = _wsum(w, counts, np.ones_like(w))
    if p is None:
        p = _wsum(w, counts, m.astype(float)) / (total * comb(n, 2)) if n >= 2 else 0.0
    ts = tri - p * p2 + p * p * m * (n - 2) - p**3 * comb(n, 3) if n >= 3 else np.zeros_like(w)

    def bit(b: int) -> np.ndarray:
        return ((small >> b) & 1).astype(float)

    def tau_prod(i: int, j: int, l: int) -> np.ndarray:
        return (bit(i) - p) * (bit(j) - p) * (bit(l) - p)

    t123 = tau_prod(0, 1, 2) if n >= 3 else np.zeros_like(w)
    t124 = tau_prod(0, 3, 4) if n >= 4 else None
    t145 = tau_prod(3, 5, 6) if n >= 5 else None
    return EnumeratedMoments(
        n=n,
        d=d,
        delta=delta,
        tau=tau,
        p=float(p),
        mean_signed=_wsum(w, counts, ts),
        second_signed=_wsum(w, counts, ts * ts),
        mean_plain=_wsum(w, counts, tri.astype(float)),
        tau_mean=_wsum(w, counts, t123),
        tau_second=_wsum(w, counts, t123 * t123),
        tau_shared_edge=None if t124 is None else _wsum(w, counts, t123 * t124),
        tau_shared_vertex=None if t145 is None else _wsum(w, counts, t123 * t145),
    )


@lru_cache(maxsize=16)
def _graph_table(n: int, d: int, tau: int) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Popcount/graph-id pairs with multiplicities, plus the graph keys by id."""
    check_enumeration_size(n, d)
    ks, rowsets = [], []
    for k, masks in _chunks(n, d):
        rows = _rows_from_masks(masks, tau)
        ks.append(k)
        rowsets.append(np.stack(rows, axis=1) if n > 0 else np.zeros((k.size, 0), np.uint32))
    k = np.concatenate(ks)
    rows = np.concatenate(rowsets)
    graphs, gid = np.unique(rows, axis=0, return_inverse=True)
    pairs = np.stack([k, gid.ravel()], axis=1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    keys = []
    for r in graphs:
        key = 0
        bit = 0
        for i in range(n):
            for j in range(i + 1, n):
                if int(r[i]) >> j & 1:
                    key |= 1 << bit
                bit += 1
        keys.append(key)
    return uniq, counts, keys


def rig_graph_law(n: int, d: int, delta: float, tau: int = 1) -> dict[int, float]:
    """Exact law of the intersection graph as ``{graph key: probability}``."""
    uniq, counts, keys = _graph_table(n, d, tau)
    w = _weights(uniq[:, 0], n * d, delta) * counts
    acc: dict[int, list[float]] = {}
    for gid, wt in zip(uniq[:, 1].tolist(), w.tolist()):
        if wt > 0:
            acc.setdefault(keys[gid], []).append(wt)
    return {key: math.fsum(v) for key, v in acc.items()}
