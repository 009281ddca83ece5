import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs
from geomdetect.graph_core import (
    Graph,
    edge_count,
    pair_index,
    signed_triangle_stat,
    triangle_count,
    upper_pairs,
)


def brute_signed(g, p):
    e = g.adjacency().astype(float)
    return sum(
        (e[i, j] - p) * (e[i, k] - p) * (e[j, k] - p) for i, j, k in itertools.combinations(range(g.n), 3)
    )


def brute_triangles(g):
    a = g.adjacency()
    return sum(a[i, j] and a[i, k] and a[j, k] for i, j, k in itertools.combinations(range(g.n), 3))


class TestCounts:
    def test_edge_count_examples(self):
        assert edge_count(Graph(5)) == 0
        assert edge_count(Graph.complete(4)) == 6
        assert edge_count(Graph(3, [(1, 2), (2, 3)])) == 2

    def test_triangle_count_examples(self):
        assert triangle_count(Graph.complete(4)) == 4
        assert triangle_count(Graph(6, [(1, 2), (2, 3), (2, 4), (4, 5), (1, 6)])) == 0
        assert triangle_count(Graph(5, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])) == 0

    @given(graphs())
    def test_triangle_count_matches_triple_loop(self, g):
        assert triangle_count(g) == brute_triangles(g)
        assert triangle_count(g) <= comb(g.n, 3)


class TestSignedTriangles:
    def test_complete_triangle(self):
        assert signed_triangle_stat(Graph.complete(3), 0.5) == pytest.approx(0.125, abs=1e-15)

    @pytest.mark.parametrize("p", [0.0, 0.2, 0.7, 1.0])
    def test_empty_triangle(self, p):
        assert signed_triangle_stat(Graph(3), p) == pytest.approx(-(p**3), abs=1e-15)

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            signed_triangle_stat(Graph(3), 1.5)
        with pytest.raises(ValueError):
            signed_triangle_stat(Graph(3), -0.1)

    def test_small_graphs_are_zero(self):
        assert signed_triangle_stat(Graph(2, [(1, 2)]), 0.3) == 0.0
        assert triangle_count(Graph(1)) == 0

    @given(graphs(), st.floats(0, 1))
    def test_matches_triple_loop(self, g, p):
        assert signed_triangle_stat(g, p) == pytest.approx(brute_signed(g, p), abs=1e-9)

    @given(graphs())
    def test_zero_p_is_triangle_count(self, g):
        assert signed_triangle_stat(g, 0.0) == triangle_count(g)

    @given(graphs(min_n=3), st.floats(0, 1), st.randoms())
    def test_relabel_invariance(self, g, p, r):
        perm = list(range(1, g.n + 1))
        r.shuffle(perm)
        h = g.relabel(perm)
        assert signed_triangle_stat(h, p) == pytest.approx(signed_triangle_stat(g, p), abs=1e-9)
        assert triangle_count(h) == triangle_count(g)

    @given(st.integers(3, 40), st.floats(0, 1))
    def test_complete_graph_value(self, n, p):
        assert signed_triangle_stat(Graph.complete(n), p) == pytest.approx(comb(n, 3) * (1 - p) ** 3, abs=1e-8)


class TestGraphType:
    def test_rejects_self_loops_and_bad_labels(self):
        with pytest.raises(ValueError):
            Graph(3, [(2, 2)])
        with pytest.raises(ValueError):
            Graph(3, [(1, 4)])
        with pytest.raises(ValueError):
            Graph(0)

    def test_multi_edges_collapse(self):
        g = Graph(3, [(1, 2), (2, 1), (1, 2)])
        assert edge_count(g) == 1
        assert g.edges == frozenset({(1, 2)})

    def test_equality_is_labeled(self):
        assert Graph(3, [(1, 2)]) == Graph(3, [(2, 1)])
        assert Graph(3, [(1, 2)]) != Graph(3, [(2, 3)])
        assert Graph(3, [(1, 2)]) != Graph(4, [(1, 2)])

    def test_pair_index_is_lexicographic(self):
        n = 6
        assert [pair_index(i, j, n) for i, j in upper_pairs(n)] == list(range(comb(n, 2)))
        with pytest.raises(ValueError):
            pair_index(2, 2, n)

    @given(graphs())
    def test_json_round_trip(self, g):
        assert Graph.from_json(g.to_json()) == g

    @given(graphs())
    def test_edgelist_round_trip(self, g):
        assert Graph.from_edgelist(g.to_edgelist(), g.n) == g

    @given(graphs())
    def test_key_round_trip(self, g):
        assert Graph.from_key(g.n, g.key()) == g

    @given(graphs())
    def test_adjacency_round_trip(self, g):
        a = g.adjacency()
        assert np.array_equal(a, a.T)
        assert not a.diagonal().any()
        assert Graph.from_adjacency(a) == g
        iu = np.triu_indices(g.n, k=1)
        assert Graph.from_upper_bits(g.n, a[iu]) == g

    def test_json_format(self):
        assert Graph(3, [(2, 3), (1, 2)]).to_json() == '{"n": 3, "edges": [[1, 2], [2, 3]]}'

    def test_from_adjacency_rejects_asymmetric(self):
        a = np.zeros((3, 3), dtype=bool)
        a[0, 1] = True
        with pytest.raises(ValueError):
            Graph.from_adjacency(a)

    @settings(max_examples=30)
    @given(graphs(min_n=2))
    def test_has_edge_and_degrees(self, g):
        a = g.adjacency()
        for i in range(1, g.n + 1):
            assert g.degree(i) == a[i - 1].sum()
            for j in range(1, g.n + 1):
                assert g.has_edge(i, j) == bool(a[i - 1, j - 1])
