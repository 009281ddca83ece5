import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import within_se
from geomdetect.divergences import l1_deviation_radius, rig_graph_pmf
from geomdetect.graph_core import Graph, edge_count, triangle_count
from geomdetect.latent_models import (
    Ensemble,
    IntersectionMatrix,
    LatentSets,
    ModelSpec,
    delta_from_p,
    delta_from_p_tau,
    intersection_graph,
    intersection_matrix,
    multinomial_counts,
    p_from_delta_tau,
    planted_clique_density,
    poissonization_tv_bound,
    poissonized_pair_probability,
    rig_poissonized_sample,
    sample_er,
    sample_latent_sets,
    sample_planted_clique,
    sample_poim,
    sample_poim_planted,
    sample_rig,
    sample_rig_clique_union,
    threshold_matrix,
    uniform_subset,
)


def edge_density(g):
    return edge_count(g) / comb(g.n, 2)


class TestConversions:
    def test_delta_from_p_examples(self):
        assert delta_from_p(0.0, 17) == 0.0
        assert delta_from_p(0.36, 1) == pytest.approx(0.6, abs=1e-15)
        delta = delta_from_p(0.3, 100)
        assert 1 - (1 - delta**2) ** 100 == pytest.approx(0.3, abs=1e-12)

    def test_delta_from_p_errors(self):
        for bad in (1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                delta_from_p(bad, 10)

    @given(st.floats(1e-9, 0.999), st.integers(1, 10**7))
    def test_delta_bracket(self, p, d):
        d2 = delta_from_p(p, d) ** 2
        assert p / d * (1 - 1e-12) <= d2 <= -math.log1p(-p) / d * (1 + 1e-12)

    @given(st.floats(0.0, 0.99), st.integers(1, 10**6))
    def test_round_trip(self, p, d):
        assert p_from_delta_tau(delta_from_p(p, d), d, 1) == pytest.approx(p, abs=1e-12)

    def test_p_from_delta_tau_oracle(self):
        got = p_from_delta_tau(0.3, 20, 3)
        want = math.fsum(comb(20, k) * 0.09**k * 0.91 ** (20 - k) for k in range(3, 21))
        assert got == pytest.approx(want, rel=1e-13)
        assert p_from_delta_tau(0.0, 5, 2) == 0.0
        with pytest.raises(ValueError):
            p_from_delta_tau(0.3, 5, 7)

    @pytest.mark.parametrize("tau", [2, 3, 5])
    def test_tau_inversion(self, tau):
        for p in (0.01, 0.3, 0.8):
            delta = delta_from_p_tau(p, 40, tau)
            assert p_from_delta_tau(delta, 40, tau) == pytest.approx(p, abs=1e-12)

    def test_tau_inversion_infeasible(self):
        with pytest.raises(ValueError):
            delta_from_p_tau(0.2, 3, 4)


class TestPrimitives:
    def test_uniform_subset(self, rng):
        s = uniform_subset(10, 4, rng)
        assert len(set(s)) == 4 and all(0 <= v < 10 for v in s)
        with pytest.raises(ValueError):
            uniform_subset(3, 4, rng)

    def test_uniform_subset_is_uniform(self, rng):
        counts = {}
        for _ in range(20000):
            key = tuple(sorted(uniform_subset(5, 2, rng)))
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 10
        assert stats.chisquare(list(counts.values())).pvalue > 0.001

    def test_multinomial_counts(self, rng):
        probs = np.array([0.5, 0.3, 0.2])
        draws = np.array([multinomial_counts(100, probs, rng) for _ in range(4000)])
        assert (draws.sum(axis=1) == 100).all()
        for k in range(3):
            ok, _, _ = within_se(draws[:, k], 100 * probs[k])
            assert ok

    def test_hypergeometric_overlap(self, rng):
        n, t = 12, 4
        ks = [len(set(uniform_subset(n, t, rng)) & set(uniform_subset(n, t, rng))) for _ in range(20000)]
        obs = np.bincount(ks, minlength=t + 1)
        exp = stats.hypergeom.pmf(np.arange(t + 1), n, t, t) * len(ks)
        assert (exp >= 5).all()
        assert stats.chisquare(obs, exp).pvalue > 0.001


class TestGraphSamplers:
    def test_er_extremes(self, rng):
        assert edge_count(sample_er(7, 0.0, rng)) == 0
        assert sample_er(7, 1.0, rng) == Graph.complete(7)

    def test_er_edge_frequency(self, rng):
        dens = [edge_density(sample_er(50, 0.4, rng)) for _ in range(10**5 // 10)]
        ok, mean, se = within_se(dens, 0.4)
        assert ok, (mean, se)

    def test_latent_sets_extremes(self, rng):
        assert not sample_latent_sets(4, 6, 0.0, rng).membership.any()
        assert sample_latent_sets(4, 6, 1.0, rng).membership.all()

    def test_latent_set_frequency(self, rng):
        freq = [sample_latent_sets(10, 30, 0.2, rng).membership.mean() for _ in range(2000)]
        assert within_se(freq, 0.2)[0]

    def test_intersection_graph_example(self):
        sets = LatentSets.from_sets([{1, 2}, {2, 3}, {4}], d=4)
        assert intersection_graph(sets, 1) == Graph(3, [(1, 2)])
        assert edge_count(intersection_graph(sets, 5)) == 0

    @settings(max_examples=50)
    @given(st.integers(1, 8), st.integers(1, 12), st.floats(0, 1), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_intersection_graph_matches_pairwise_sets(self, n, d, delta, tau, seed):
        sets = sample_latent_sets(n, d, delta, np.random.default_rng(seed))
        rows = [set(np.flatnonzero(r)) for r in sets.membership]
        g = intersection_graph(sets, tau)
        m = intersection_matrix(sets)
        for i in range(n):
            for j in range(n):
                if i != j:
                    assert m.entries[i, j] == len(rows[i] & rows[j])
                    assert g.has_edge(i + 1, j + 1) == (len(rows[i] & rows[j]) >= tau)
        assert threshold_matrix(m, tau) == g

    def test_threshold_composition_many(self, rng):
        for _ in range(1000):
            sets = sample_latent_sets(int(rng.integers(1, 8)), int(rng.integers(1, 10)), float(rng.random()), rng)
            tau = int(rng.integers(1, 4))
            assert threshold_matrix(intersection_matrix(sets), tau) == intersection_graph(sets, tau)

    def test_rig_zero_density(self, rng):
        assert edge_count(sample_rig(6, 10, 0.0, 1, rng)) == 0

    def test_rig_two_vertices_is_er(self, rng):
        # exact: both laws are Bernoulli(p) on the only edge
        pmf = rig_graph_pmf(2, 5, delta_from_p(0.3, 5))
        assert pmf.as_dict()[1] == pytest.approx(0.3, abs=1e-15)

    def test_rig_edge_frequency(self, rng):
        dens = [edge_density(sample_rig(20, 200, 0.3, 1, rng)) for _ in range(10**5 // 10)]
        ok, mean, se = within_se(dens, 0.3)
        assert ok, (mean, se)

    @pytest.mark.parametrize("tau", [1, 2, 3])
    def test_rig_marginal_across_thresholds(self, rng, tau):
        dens = [edge_density(sample_rig(10, 60, 0.25, tau, rng, method="incidence")) for _ in range(4000)]
        ok, mean, se = within_se(dens, 0.25)
        assert ok, (tau, mean, se)

    def test_clique_union_matches_incidence_law(self, rng):
        n, d, p = 4, 5, 0.4
        exact = rig_graph_pmf(n, d, delta_from_p(p, d))
        draws = [sample_rig_clique_union(n, d, p, rng).key() for _ in range(20000)]
        freq = {}
        for k in draws:
            freq[k] = freq.get(k, 0) + 1
        tv = 0.5 * sum(abs(freq.get(k, 0) / len(draws) - v) for k, v in exact.as_dict().items())
        assert tv <= l1_deviation_radius(len(exact), len(draws), 0.01) / 2

    def test_rig_rejects_infeasible(self, rng):
        with pytest.raises(ValueError):
            sample_rig(4, 3, 0.2, 5, rng)
        with pytest.raises(ValueError):
            sample_rig(4, 3, 1.0, 1, rng)
        with pytest.raises(ValueError):
            sample_rig(4, 3, 0.2, 2, rng, method="clique_union")

    def test_planted_clique_examples(self, rng):
        assert sample_planted_clique(5, 5, 0.3, rng) == Graph.complete(5)
        for _ in range(20):
            assert edge_count(sample_planted_clique(6, 2, 0.0, rng)) == 1

    def test_planted_clique_marginal(self, rng):
        dens = [edge_density(sample_planted_clique(6, 3, 0.2, rng)) for _ in range(10**5)]
        assert planted_clique_density(6, 3, 0.2) == pytest.approx(0.36)
        ok, mean, se = within_se(dens, 0.36)
        assert ok, (mean, se)

    @pytest.mark.parametrize(
        "sampler",
        [
            lambda r: sample_er(6, 0.3, r),
            lambda r: sample_rig(6, 8, 0.3, 1, r),
            lambda r: sample_planted_clique(6, 3, 0.2, r),
            lambda r: rig_poissonized_sample(6, 8, 0.3, r),
        ],
    )
    def test_exchangeability(self, rng, sampler):
        first, last, tri = [], [], []
        for _ in range(6000):
            g = sampler(rng)
            first.append(g.has_edge(1, 2))
            last.append(g.has_edge(5, 6))
            perm = list(rng.permutation(6) + 1)
            tri.append(triangle_count(g) == triangle_count(g.relabel(perm)))
        diff = np.asarray(first, float) - np.asarray(last, float)
        assert within_se(diff, 0.0)[0]
        assert all(tri)


class TestMatrices:
    def test_intersection_matrix_examples(self):
        assert not intersection_matrix(LatentSets(np.zeros((3, 4), bool))).entries.any()
        full = intersection_matrix(LatentSets(np.ones((2, 5), bool)))
        assert full.entries[0, 1] == 5

    def test_matrix_invariants(self):
        with pytest.raises(ValueError):
            IntersectionMatrix(np.array([[1, 0], [0, 0]]))
        with pytest.raises(ValueError):
            IntersectionMatrix(np.array([[0, 1], [2, 0]]))
        with pytest.raises(ValueError):
            IntersectionMatrix(np.array([[0, -1], [-1, 0]]))

    def test_csv(self):
        m = IntersectionMatrix(np.array([[0, 2, 0], [2, 0, 1], [0, 1, 0]]))
        assert m.to_csv() == "i,j,value\n1,2,2\n1,3,0\n2,3,1\n"

    def test_poim_examples(self, rng):
        assert not sample_poim(5, 0.0, rng).entries.any()
        m = sample_poim_planted(5, 5, 0.0, rng)
        assert (m.upper() == 1).all()
        m = sample_poim_planted(5, 2, 0.0, rng)
        assert m.upper().sum() == 1

    def test_poim_mean_and_law(self, rng):
        vals = np.concatenate([sample_poim(10, 2.0, rng).upper() for _ in range(2300)])
        assert vals.size >= 10**5
        assert within_se(vals, 2.0)[0]
        counts = np.bincount(vals)
        exp = stats.poisson.pmf(np.arange(counts.size), 2.0) * vals.size
        keep = exp >= 5
        obs = np.append(counts[keep], counts[~keep].sum())
        expv = np.append(exp[keep], vals.size - exp[keep].sum())
        assert stats.chisquare(obs, expv).pvalue > 0.001

    def test_planted_poim_mean(self, rng):
        n, t, lam = 6, 3, 0.7
        vals = np.concatenate([sample_poim_planted(n, t, lam, rng).upper() for _ in range(10000)])
        assert within_se(vals, lam + comb(t, 2) / comb(n, 2))[0]

    def test_thresholded_poim(self, rng):
        d, delta, tau = 50, 0.2, 2
        lam = d * delta**2
        edges = [edge_density(threshold_matrix(sample_poim(8, lam, rng), tau)) for _ in range(5000)]
        assert within_se(edges, stats.poisson.sf(tau - 1, lam))[0]


class TestPoissonized:
    def test_small_delta_is_empty(self, rng):
        assert all(edge_count(rig_poissonized_sample(5, 10**9, 1e-9, rng)) == 0 for _ in range(50))

    def test_pair_cliques_give_er(self, rng):
        n, d, p = 7, 40, 0.3
        q = poissonized_pair_probability(n, d, p)
        delta = delta_from_p(p, d)
        assert q == pytest.approx(1 - math.exp(-d * delta**2 * (1 - delta) ** (n - 2)))
        dens = [edge_density(rig_poissonized_sample(n, d, p, rng, clique_sizes=[2])) for _ in range(20000)]
        ok, mean, se = within_se(dens, q)
        assert ok, (mean, se, q)

    def test_edge_count_close_to_rig(self, rng):
        n, d, p = 3, 2, 0.05
        exact = rig_graph_pmf(n, d, delta_from_p(p, d)).pushforward(lambda k: bin(k).count("1"))
        draws = [edge_count(rig_poissonized_sample(n, d, p, rng)) for _ in range(20000)]
        freq = {k: draws.count(k) / len(draws) for k in set(draws)}
        tv = 0.5 * sum(abs(freq.get(k, 0.0) - exact.as_dict().get(k, 0.0)) for k in set(freq) | set(exact.outcomes))
        radius = l1_deviation_radius(4, len(draws), 0.01) / 2
        assert tv <= poissonization_tv_bound(n, d, p) + radius

    def test_bound_is_one_minus_p0_p1(self):
        n, d, p = 5, 30, 0.2
        delta = delta_from_p(p, d)
        p0 = (1 - delta) ** n
        p1 = n * delta * (1 - delta) ** (n - 1)
        assert poissonization_tv_bound(n, d, p) == pytest.approx(1 - p0 - p1, rel=1e-12)


class TestModelSpec:
    def test_parse_and_resolve(self):
        s = ModelSpec.parse("model=rig, n=20, d=200, p=0.3, tau=1")
        assert s.model is Ensemble.RIG and s.n == 20 and s.threshold == 1
        assert s.resolved_delta() == pytest.approx(delta_from_p(0.3, 200))
        assert ModelSpec.parse(s.describe().replace("RIG(", "model=RIG;").rstrip(")")) == s

    def test_config_file(self, tmp_path):
        f = tmp_path / "m.cfg"
        f.write_text("# planted clique\nmodel = planted_clique\nn = 6\nt = 3\nq = 0.2\n")
        s = ModelSpec.from_config_file(f)
        assert s.resolved_p() == pytest.approx(0.36)

    @pytest.mark.parametrize(
        "text",
        [
            "model=rig,n=5,d=3",  # neither p nor delta
            "model=rig,n=5,d=3,p=0.2,delta=0.1",  # over-determined
            "model=er,n=5,p=0.2,d=3",  # extra parameter
            "model=er,n=5,p=1.5",
            "model=rig,n=5,d=3,p=0.2,tau=2",
            "model=planted_clique,n=4,t=5,q=0.2",
            "model=er,n=5,p=0.2,p=0.3",
            "model=nope,n=5",
            "n=5,p=0.2",
            "model=poim,n=4,lam=-1",
            "model=er,n=2.5,p=0.2",
        ],
    )
    def test_invalid_specs(self, text):
        with pytest.raises(ValueError):
            ModelSpec.parse(text)

    @pytest.mark.parametrize(
        "text",
        [
            "model=er,n=5,p=0.2",
            "model=rig,n=5,d=30,delta=0.1",
            "model=rig_tau,n=5,d=30,p=0.2,tau=2",
            "model=rig_p,n=5,d=30,p=0.2",
            "model=planted_clique,n=5,t=3,q=0.2",
            "model=rim,n=5,d=30,p=0.2",
            "model=poim,n=5,lambda=0.5",
            "model=poim_p,n=5,t=3,lam=0.5",
            "model=rgg,n=5,d=30,p=0.2",
        ],
    )
    def test_every_ensemble_samples(self, text, rng):
        s = ModelSpec.parse(text)
        out = s.sample(rng)
        assert out.n == 5
        assert isinstance(out, IntersectionMatrix) == s.is_matrix
