"""Finite-distribution divergences, exact graph laws and closed-form chi-square values.

Graph laws are keyed by :meth:`Graph.key`, the integer whose bits are the
upper-triangle edge indicators, so pmfs from different sources join exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Callable, Hashable, Iterable, Mapping

import numpy as np
from scipy import stats

from .enumeration import check_enumeration_size, rig_graph_law
from .graph_core import Graph, pair_index

_NORM_TOL = 1e-12
_MAX_PMF_N = 6


@dataclass(frozen=True, eq=False)
class FinitePmf:
    """Probability mass function on finitely many hashable outcomes."""

    outcomes: tuple
    probs: np.ndarray

    def __post_init__(self) -> None:
        outcomes = tuple(self.outcomes)
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(outcomes),):
            raise ValueError(f"{len(outcomes)} outcomes but {probs.shape} probabilities")
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("duplicate outcomes")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and nonnegative")
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > _NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(cls, mass: Mapping[Hashable, float]) -> "FinitePmf":
        keys = list(mass)
        return cls(tuple(keys), np.array([mass[k] for k in keys], dtype=float))

    def as_dict(self) -> dict:
        return dict(zip(self.outcomes, self.probs.tolist()))

    def __len__(self) -> int:
        return len(self.outcomes)

    def pushforward(self, f: Callable[[Hashable], Hashable]) -> "FinitePmf":
        """Law of ``f(X)``."""
        acc: dict[Hashable, list[float]] = {}
        for o, w in zip(self.outcomes, self.probs.tolist()):
            acc.setdefault(f(o), []).append(w)
        return FinitePmf.from_mapping({k: math.fsum(v) for k, v in acc.items()})


def _aligned(a: FinitePmf, b: FinitePmf) -> tuple[np.ndarray, np.ndarray]:
    da, db = a.as_dict(), b.as_dict()
    keys = list(dict.fromkeys(itertools.chain(a.outcomes, b.outcomes)))
    return (
        np.array([da.get(k, 0.0) for k in keys]),
        np.array([db.get(k, 0.0) for k in keys]),
    )


def tv_exact(a: FinitePmf, b: FinitePmf) -> float:
    """``(1/2) sum |a - b|`` over the union of supports."""
    pa, pb = _aligned(a, b)
    return min(1.0, 0.5 * math.fsum(np.abs(pa - pb).tolist()))


def kl_exact(a: FinitePmf, b: FinitePmf) -> float:
    """``KL(a || b)``; infinite unless ``a`` is absolutely continuous w.r.t. ``b``."""
    pa, pb = _aligned(a, b)
    if np.any((pa > 0) & (pb == 0)):
        return math.inf
    m = pa > 0
    return max(0.0, math.fsum((pa[m] * np.log(pa[m] / pb[m])).tolist()))


def chi2_exact(a: FinitePmf, b: FinitePmf) -> float:
    """``chi^2(a, b) = sum a^2 / b - 1``, accumulated as ``sum (a - b)^2 / b``."""
    pa, pb = _aligned(a, b)
    if np.any((pa > 0) & (pb == 0)):
        return math.inf
    m = pb > 0
    return math.fsum(((pa[m] - pb[m]) ** 2 / pb[m]).tolist())


# ---------------------------------------------------------------------------
# exact graph laws


def rig_graph_pmf(n: int, d: int, delta: float, tau: int = 1) -> FinitePmf:
    """Exact law of the intersection graph by enumerating all ``2^(n d)`` patterns."""
    check_enumeration_size(n, d)
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    return FinitePmf.from_mapping(rig_graph_law(n, d, delta, tau))


def _check_pmf_n(n: int) -> None:
    if not 1 <= n <= _MAX_PMF_N:
        raise ValueError(f"exact graph pmfs need 1 <= n <= {_MAX_PMF_N} (2^C(n,2) outcomes), got n={n}")


def er_graph_pmf(n: int, p: float) -> FinitePmf:
    """Exact law of ``G(n, p)`` over all ``2^C(n,2)`` labeled graphs."""
    _check_pmf_n(n)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    N = comb(n, 2)
    keys = np.arange(1 << N, dtype=np.int64)
    m = np.bitwise_count(keys).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        probs = np.where(m > 0, p**m, 1.0) * np.where(N - m > 0, (1 - p) ** (N - m), 1.0)
    return FinitePmf(tuple(keys.tolist()), probs)


def clique_key(n: int, members: Iterable[int]) -> int:
    """Key of the graph whose edges are all pairs inside the 1-based ``members``."""
    key = 0
    for i, j in itertools.combinations(sorted(members), 2):
        key |= 1 << pair_index(i, j, n)
    return key


def planted_clique_graph_pmf(n: int, t: int, q: float) -> FinitePmf:
    """Exact law of the planted clique graph as a uniform mixture over ``t``-subsets."""
    _check_pmf_n(n)
    if not 2 <= t <= n:
        raise ValueError(f"need 2 <= t <= n, got t={t}, n={n}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    N = comb(n, 2)
    keys = np.arange(1 << N, dtype=np.int64)
    m = np.bitwise_count(keys).astype(np.int64)
    subsets = list(itertools.combinations(range(1, n + 1), t))
    free = N - comb(t, 2)
    probs = np.zeros(keys.size)
    for s in subsets:
        forced = clique_key(n, s)
        ok = (keys & forced) == forced
        extra = m - comb(t, 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(extra > 0, q**extra, 1.0) * np.where(free - extra > 0, (1 - q) ** (free - extra), 1.0)
        probs += np.where(ok, w, 0.0)
    probs /= len(subsets)
    return FinitePmf(tuple(keys.tolist()), probs)


# ---------------------------------------------------------------------------
# closed-form chi-square values


def _log_hypergeom(n: int, t: int, k: int) -> float:
    """``log P[|S ∩ T| = k]`` for independent uniform ``t``-subsets of ``[n]``."""
    return _lcomb(t, k) + _lcomb(n - t, t - k) - _lcomb(n, t)


def _lcomb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def _overlap_support(n: int, t: int) -> range:
    return range(max(0, 2 * t - n), t + 1)


def chi2_planted_clique(n: int, t: int, q: float) -> float:
    """``chi^2(G(n,t,q), G(n,p))`` with ``p`` the planted edge marginal.

    Summing over the overlap ``k = |S ∩ T|``, the ``C(k,2)`` edges in both
    cliques contribute ``1/p`` each, the ``2C(t,2) - 2C(k,2)`` edges in exactly
    one contribute ``q/p`` and the rest ``1 + tau^2/(p(1-p))``.
    """
    if not 2 <= t <= n:
        raise ValueError(f"need 2 <= t <= n, got t={t}, n={n}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    N, M = comb(n, 2), comb(t, 2)
    tau = (1 - q) * M / N
    p = q + tau
    if not p < 1.0:
        raise ValueError(f"planted density p = {p} must be < 1")
    lp, lq = math.log(p), math.log(q)
    lneither = math.log1p(tau * tau / (p * (1 - p)))
    terms = []
    for k in _overlap_support(n, t):
        ck = comb(k, 2)
        log_ratio = -ck * lp + (2 * M - 2 * ck) * (lq - lp) + (N - 2 * M + ck) * lneither
        terms.append(math.exp(_log_hypergeom(n, t, k)) * math.expm1(log_ratio))
    return max(0.0, math.fsum(terms))


def chi2_poim_planted(n: int, t: int, lam: float) -> float:
    """``chi^2(POIM_P(n,t,lam), POIM(n, lam + tau))`` with ``tau = C(t,2)/C(n,2)``.

    Per entry with ``mu = lam + tau``: ``exp(tau^2/mu)`` outside both planted
    sets, ``(lam/mu) exp(tau^2/mu)`` inside exactly one and
    ``(lam^2 + mu)/mu^2 exp(tau^2/mu)`` inside both, which gives
    ``exp(C(n,2) tau^2/mu) (lam/mu)^(2C(t,2)) E_k[((lam^2+lam+tau)/lam^2)^C(k,2)]``.
    """
    if not 2 <= t <= n:
        raise ValueError(f"need 2 <= t <= n, got t={t}, n={n}")
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    N, M = comb(n, 2), comb(t, 2)
    tau = M / N
    mu = lam + tau
    base = N * tau * tau / mu + 2 * M * (math.log(lam) - math.log(mu))
    lboth = math.log1p((lam + tau) / (lam * lam))
    terms = [
        math.exp(_log_hypergeom(n, t, k)) * math.expm1(base + comb(k, 2) * lboth) for k in _overlap_support(n, t)
    ]
    return max(0.0, math.fsum(terms))


# ---------------------------------------------------------------------------
# binomial and Poisson total variation


def _binom_logpmf(N: int, p: float) -> np.ndarray:
    return stats.binom.logpmf(np.arange(N + 1), N, p)


def tv_binom_exact(N: int, p: float, q: float) -> float:
    """Exact ``d_TV(Bin(N,p), Bin(N,q))`` from log-space pmfs."""
    for name, v in (("p", p), ("q", q)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    if p == q:
        return 0.0
    a = np.exp(_binom_logpmf(N, p))
    b = np.exp(_binom_logpmf(N, q))
    return min(1.0, 0.5 * math.fsum(np.abs(a - b).tolist()))


def tv_binom_bound(N: int, p: float, q: float) -> float:
    """``gamma + 3 gamma^2`` with ``gamma = (q - p) sqrt(N / (p(1-p)))``."""
    if not 0.0 < p < q < 1.0:
        raise ValueError(f"need 0 < p < q < 1, got p={p}, q={q}")
    g = (q - p) * math.sqrt(N / (p * (1 - p)))
    return g + 3 * g * g


def _poisson_cap(*lams: float, mass: float = 1e-15) -> int:
    """Smallest convenient ``K`` with ``P[Poisson(lam) > K] < mass`` for every ``lam``."""
    top = max(lams)
    if top == 0:
        return 0
    k = int(math.ceil(top + 10.0 * math.sqrt(top) + 30.0))
    while stats.poisson.sf(k, top) >= mass:
        k = int(k * 1.5) + 10
    return k


def tv_poisson_exact(lam1: float, lam2: float) -> float:
    """Exact ``d_TV(Poisson(lam1), Poisson(lam2))``; truncation mass below ``1e-14``."""
    if lam1 < 0 or lam2 < 0:
        raise ValueError("Poisson means must be nonnegative")
    if lam1 == lam2:
        return 0.0
    ks = np.arange(_poisson_cap(lam1, lam2) + 1)
    a = stats.poisson.pmf(ks, lam1)
    b = stats.poisson.pmf(ks, lam2)
    residual = max(stats.poisson.sf(ks[-1], lam1), stats.poisson.sf(ks[-1], lam2))
    if residual >= 1e-14:
        raise ArithmeticError(f"Poisson truncation left mass {residual}")
    return min(1.0, 0.5 * math.fsum(np.abs(a - b).tolist()))


def tv_poisson_bound(lam1: float, lam2: float) -> float:
    """``sqrt((exp((lam1 - lam2)^2 / lam1) - 1) / 2)`` for ``lam1 >= lam2 > 0``.

    The bound is stated with the larger mean in the denominator; swapped
    arguments are reordered with a warning.
    """
    if lam2 > lam1:
        import warnings

        warnings.warn("tv_poisson_bound expects lam1 >= lam2; swapping", stacklevel=2)
        lam1, lam2 = lam2, lam1
    if not lam2 > 0:
        raise ValueError(f"need lam1 >= lam2 > 0, got {lam1}, {lam2}")
    return math.sqrt(0.5 * math.expm1((lam1 - lam2) ** 2 / lam1))


# ---------------------------------------------------------------------------
# empirical lower bound


@dataclass(frozen=True)
class PluginEstimate:
    """Plug-in total variation between two empirical feature laws."""

    estimate: float
    radius: float
    support: int
    samples: int
    alpha: float


def l1_deviation_radius(support: int, m: int, alpha: float) -> float:
    """Radius ``r`` with ``P[||p_hat - p||_1 >= r] <= alpha`` on ``support`` atoms.

    Uses ``P[||p_hat - p||_1 >= r] <= (2^K - 2) exp(-m r^2 / 2)``.
    """
    k = max(support, 2)
    return math.sqrt(2.0 * (k * math.log(2.0) + math.log(1.0 / alpha)) / m)


def empirical_tv(xs: Iterable[Hashable], ys: Iterable[Hashable]) -> tuple[float, int]:
    """``(1/2) ||P_x - P_y||_1`` for two samples and the size of the joint support."""
    xs, ys = list(xs), list(ys)
    keys = set(xs) | set(ys)
    cx: dict[Hashable, int] = {}
    cy: dict[Hashable, int] = {}
    for v in xs:
        cx[v] = cx.get(v, 0) + 1
    for v in ys:
        cy[v] = cy.get(v, 0) + 1
    tv = 0.5 * math.fsum(abs(cx.get(k, 0) / len(xs) - cy.get(k, 0) / len(ys)) for k in keys)
    return tv, len(keys)


def tv_plugin_lower_bound(
    sampler_a: Callable[[np.random.Generator], Graph],
    sampler_b: Callable[[np.random.Generator], Graph],
    feature: Callable[[Graph], Hashable],
    m: int,
    rng: np.random.Generator,
    *,
    alpha: float = 0.01,
) -> PluginEstimate:
    """Plug-in total variation of a graph feature from ``m`` draws of each sampler.

    By data processing the feature-level distance never exceeds the graph-level
    one; ``radius`` bounds the estimation error of the plug-in with probability
    at least ``1 - alpha``.
    """
    if m < 100:
        raise ValueError(f"m must be >= 100, got {m}")
    xs = [feature(sampler_a(rng)) for _ in range(m)]
    ys = [feature(sampler_b(rng)) for _ in range(m)]
    est, support = empirical_tv(xs, ys)
    # alpha/2 for each sample, each contributing half its L1 error
    radius = l1_deviation_radius(support, m, alpha / 2)
    return PluginEstimate(estimate=est, radius=radius, support=support, samples=m, alpha=alpha)


def pooled_counts(xs: Iterable[Hashable], ys: Iterable[Hashable], min_expected: float = 5.0) -> np.ndarray:
    """Two-row contingency table of sorted outcomes with sparse bins merged.

    Adjacent bins are merged from both ends until every pooled expected
    count is at least ``min_expected``.
    """
    xs, ys = list(xs), list(ys)
    keys = sorted(set(xs) | set(ys))
    cx = {k: 0 for k in keys}
    cy = {k: 0 for k in keys}
    for v in xs:
        cx[v] += 1
    for v in ys:
        cy[v] += 1
    table = [[cx[k], cy[k]] for k in keys]
    frac = (len(xs), len(ys))
    total = sum(frac)

    def small(col: list[int]) -> bool:
        s = col[0] + col[1]
        return min(s * frac[0], s * frac[1]) / total < min_expected

    while len(table) > 1 and small(table[0]):
        a = table.pop(0)
        table[0] = [table[0][0] + a[0], table[0][1] + a[1]]
    while len(table) > 1 and small(table[-1]):
        a = table.pop()
        table[-1] = [table[-1][0] + a[0], table[-1][1] + a[1]]
    return np.array(table, dtype=np.int64).T


def two_sample_chi2(xs: Iterable[Hashable], ys: Iterable[Hashable], min_expected: float = 5.0) -> tuple[float, float, int]:
    """Pearson homogeneity test of two samples: ``(statistic, p-value, dof)``."""
    table = pooled_counts(xs, ys, min_expected)
    if table.shape[1] < 2:
        return 0.0, 1.0, 0
    res = stats.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue), int(res.dof)


def chi2_poim_planted_by_summation(n: int, t: int, lam: float, tail: float = 1e-16) -> float:
    """Mixture-identity evaluation of the planted Poisson matrix ``chi^2``.

    ``1 + chi^2 = E_{S,T} prod_{entries} sum_x nu_S(x) nu_T(x) / mu(x)`` with
    every per-entry sum computed numerically from truncated Poisson pmfs and
    the expectation taken over all ordered pairs of ``t``-subsets.
    """
    if not 2 <= t <= n:
        raise ValueError(f"need 2 <= t <= n, got t={t}, n={n}")
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    tau = comb(t, 2) / comb(n, 2)
    mu = lam + tau
    cap = _poisson_cap(mu + 1.0, mass=tail) + 5
    xs = np.arange(cap + 1)
    base = stats.poisson.pmf(xs, mu)
    plain = stats.poisson.pmf(xs, lam)
    shifted = np.concatenate([[0.0], plain[:-1]])
    cross = {
        (False, False): math.fsum((plain * plain / base).tolist()),
        (True, False): math.fsum((shifted * plain / base).tolist()),
        (True, True): math.fsum((shifted * shifted / base).tolist()),
    }
    subsets = [frozenset(s) for s in itertools.combinations(range(n), t)]
    pairs = list(itertools.combinations(range(n), 2))
    terms = []
    for s in subsets:
        for u in subsets:
            logv = 0.0
            for i, j in pairs:
                a, b = (i in s and j in s), (i in u and j in u)
                logv += math.log(cross[(a or b, a and b)])
            terms.append(logv)
    return max(0.0, math.fsum(math.expm1(v) for v in terms) / len(terms))
