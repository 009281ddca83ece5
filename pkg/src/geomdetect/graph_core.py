"""Labeled simple graphs and the triangle statistics used for detection.

Adjacency is stored as one Python integer per vertex, bit ``j`` of row ``i``
set iff ``{i+1, j+1}`` is an edge.  Triangle counting is then a row-AND plus
popcount per edge.  Public vertex labels are 1-based; internal rows are
0-based.
"""

from __future__ import annotations

import json
from math import comb
from typing import Iterable, Iterator

import numpy as np


def pair_index(i: int, j: int, n: int) -> int:
    """Position of the 1-based pair ``i < j`` in lexicographic upper-triangle order."""
    if not 1 <= i < j <= n:
        raise ValueError(f"expected 1 <= i < j <= n, got ({i}, {j}) with n={n}")
    a = i - 1
    return a * n - a * (a + 1) // 2 + (j - i - 1)


def upper_pairs(n: int) -> Iterator[tuple[int, int]]:
    """All 1-based pairs ``(i, j)``, ``i < j``, in upper-triangle order."""
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            yield i, j


class Graph:
    """Immutable labeled simple graph on vertices ``1..n``."""

    __slots__ = ("_n", "_rows")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise ValueError(f"vertex count must be positive, got {n}")
        rows = [0] * n
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"edge ({i}, {j}) outside 1..{n}")
            rows[i - 1] |= 1 << (j - 1)
            rows[j - 1] |= 1 << (i - 1)
        self._n = n
        self._rows = tuple(rows)

    @classmethod
    def _from_rows(cls, n: int, rows: Iterable[int]) -> "Graph":
        g = cls.__new__(cls)
        g._n = n
        g._rows = tuple(int(r) for r in rows)
        return g

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "Graph":
        """Build from a symmetric boolean matrix; the diagonal is ignored."""
        a = np.asarray(adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        n = a.shape[0]
        a = a.copy()
        np.fill_diagonal(a, False)
        packed = np.packbits(a, axis=1, bitorder="little")
        rows = [int.from_bytes(packed[i].tobytes(), "little") for i in range(n)]
        return cls._from_rows(n, rows)

    @classmethod
    def from_upper_bits(cls, n: int, bits: np.ndarray) -> "Graph":
        """Build from the ``C(n,2)`` upper-triangle indicators in ``upper_pairs`` order."""
        b = np.asarray(bits, dtype=bool)
        if b.shape != (comb(n, 2),):
            raise ValueError(f"expected {comb(n, 2)} indicators, got shape {b.shape}")
        adj = np.zeros((n, n), dtype=bool)
        iu = np.triu_indices(n, k=1)
        adj[iu] = b
        return cls.from_adjacency(adj | adj.T)

    @classmethod
    def from_key(cls, n: int, key: int) -> "Graph":
        """Inverse of :meth:`key`."""
        edges = [(i, j) for (i, j) in upper_pairs(n) if key >> pair_index(i, j, n) & 1]
        return cls(n, edges)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls._from_rows(n, [full & ~(1 << i) for i in range(n)])

    @property
    def n(self) -> int:
        return self._n

    @property
    def rows(self) -> tuple[int, ...]:
        """Per-vertex neighbour bitsets (0-based bit positions)."""
        return self._rows

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.iter_edges())

    def iter_edges(self) -> Iterator[tuple[int, int]]:
        """Edges as sorted 1-based pairs in lexicographic order."""
        for i, row in enumerate(self._rows):
            r = row >> (i + 1)
            j = i + 1
            while r:
                if r & 1:
                    yield i + 1, j + 1
                r >>= 1
                j += 1

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return bool(self._rows[i - 1] >> (j - 1) & 1)

    def degree(self, i: int) -> int:
        return self._rows[i - 1].bit_count()

    def degrees(self) -> list[int]:
        return [r.bit_count() for r in self._rows]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self._n, self._n), dtype=bool)
        for i, j in self.iter_edges():
            a[i - 1, j - 1] = a[j - 1, i - 1] = True
        return a

    def key(self) -> int:
        """Canonical integer whose bit ``pair_index(i,j,n)`` is the indicator of ``{i,j}``."""
        k = 0
        for i, j in self.iter_edges():
            k |= 1 << pair_index(i, j, self._n)
        return k

    def relabel(self, perm: Iterable[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v-1]`` (``perm`` a 1-based permutation)."""
        p = list(perm)
        if sorted(p) != list(range(1, self._n + 1)):
            raise ValueError("perm must be a permutation of 1..n")
        return Graph(self._n, ((p[i - 1], p[j - 1]) for i, j in self.iter_edges()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self._n, self._rows))

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={edge_count(self)})"

    def to_json(self) -> str:
        return json.dumps({"n": self._n, "edges": [list(e) for e in self.iter_edges()]})

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        obj = json.loads(text)
        return cls(int(obj["n"]), (tuple(e) for e in obj["edges"]))

    def to_edgelist(self) -> str:
        return "".join(f"{i} {j}\n" for i, j in self.iter_edges())

    @classmethod
    def from_edgelist(cls, text: str, n: int) -> "Graph":
        edges = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split()
            edges.append((int(a), int(b)))
        return cls(n, edges)


def edge_count(g: Graph) -> int:
    return sum(r.bit_count() for r in g.rows) // 2


def _cherries(g: Graph) -> int:
    """Number of paths of length two, ``sum_v C(deg v, 2)``."""
    return sum(comb(r.bit_count(), 2) for r in g.rows)


def triangle_count(g: Graph) -> int:
    """Number of vertex triples spanning three edges."""
    rows = g.rows
    total = 0
    for i, row in enumerate(rows):
        higher = row >> (i + 1)
        j = i + 1
        while higher:
            if higher & 1:
                # common neighbours strictly above j
                total += ((row & rows[j]) >> (j + 1)).bit_count()
            higher >>= 1
            j += 1
    return total


def signed_triangle_stat(g: Graph, p: float) -> float:
    """Sum over triples of ``(e_ij - p)(e_ik - p)(e_jk - p)``.

    Expanding the product over all triples gives
    ``T - p * P2 + p^2 * m(n-2) - p^3 C(n,3)`` with ``T`` the triangle count,
    ``P2`` the number of two-paths and ``m`` the edge count.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    n = g.n
    if n < 3:
        return 0.0
    t = triangle_count(g)
    p2 = _cherries(g)
    m = edge_count(g)
    return t - p * p2 + p * p * m * (n - 2) - p**3 * comb(n, 3)
