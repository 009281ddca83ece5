"""Samplers and parameter conversions for the latent-set and matrix ensembles.

Every sampler takes an explicit ``numpy.random.Generator``; nothing reads
global random state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from math import comb
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .graph_core import Graph

_BISECT_TOL = 1e-12


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class LatentSets:
    """``n`` subsets of ``[d]`` stored as an ``n x d`` boolean incidence matrix."""

    membership: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.membership, dtype=bool)
        if m.ndim != 2:
            raise ValueError(f"membership must be 2-D, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "membership", m)

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]], d: int) -> "LatentSets":
        """Build from explicit 1-based subsets of ``[d]``."""
        sets = [set(s) for s in sets]
        m = np.zeros((len(sets), d), dtype=bool)
        for i, s in enumerate(sets):
            for x in s:
                if not 1 <= x <= d:
                    raise ValueError(f"element {x} outside [1, {d}]")
                m[i, x - 1] = True
        return cls(m)

    @property
    def n(self) -> int:
        return self.membership.shape[0]

    @property
    def d(self) -> int:
        return self.membership.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatentSets):
            return NotImplemented
        return np.array_equal(self.membership, other.membership)


@dataclass(frozen=True, eq=False)
class IntersectionMatrix:
    """Symmetric nonnegative integer matrix with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"matrix must be square, got shape {e.shape}")
        if not np.issubdtype(e.dtype, np.integer):
            if not np.all(e == np.round(e)):
                raise ValueError("entries must be integers")
            e = e.astype(np.int64)
        if np.any(np.diag(e) != 0):
            raise ValueError("diagonal must be zero")
        if not np.array_equal(e, e.T):
            raise ValueError("matrix must be symmetric")
        if np.any(e < 0):
            raise ValueError("entries must be nonnegative")
        e = e.astype(np.int64, copy=True)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def upper(self) -> np.ndarray:
        """Upper-triangle entries in lexicographic pair order."""
        return self.entries[np.triu_indices(self.n, k=1)]

    def to_csv(self) -> str:
        lines = ["i,j,value"]
        iu, ju = np.triu_indices(self.n, k=1)
        for i, j, v in zip(iu, ju, self.entries[iu, ju]):
            lines.append(f"{i + 1},{j + 1},{int(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_upper(cls, n: int, values: np.ndarray) -> "IntersectionMatrix":
        m = np.zeros((n, n), dtype=np.int64)
        m[np.triu_indices(n, k=1)] = values
        return cls(m + m.T)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntersectionMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)


# ---------------------------------------------------------------------------
# parameter conversions


def _check_prob(name: str, x: float) -> None:
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


def delta_from_p(p: float, d: int) -> float:
    """Membership probability giving edge density ``p`` at threshold one.

    Inverts ``p = 1 - (1 - delta^2)^d``.
    """
    _check_prob("p", p)
    if p == 1.0:
        raise ValueError("p = 1 has no finite membership probability")
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    return math.sqrt(-math.expm1(math.log1p(-p) / d))


def _log_binom_pmf(k: np.ndarray, n: int, s: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    lc = np.array([math.lgamma(n + 1) - math.lgamma(x + 1) - math.lgamma(n - x + 1) for x in k])
    return lc + k * math.log(s) + (n - k) * math.log1p(-s)


def p_from_delta_tau(delta: float, d: int, tau: int) -> float:
    """Edge density ``P[Bin(d, delta^2) >= tau]`` of the threshold-``tau`` graph."""
    _check_prob("delta", delta)
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    if not 1 <= tau <= d + 1:
        raise ValueError(f"tau must lie in [1, d+1] = [1, {d + 1}], got {tau}")
    s = delta * delta
    if tau == d + 1 or s == 0.0:
        return 0.0
    if s == 1.0:
        return 1.0
    if tau == 1:
        return -math.expm1(d * math.log1p(-s))
    ks = np.arange(d + 1)
    logs = _log_binom_pmf(ks, d, s)
    # sum the smaller tail, then complement if needed
    if tau - 1 < d * s:
        lower = math.fsum(np.exp(logs[:tau]))
        return min(1.0, max(0.0, 1.0 - lower))
    return min(1.0, math.fsum(np.exp(logs[tau:])))


def delta_from_p_tau(p: float, d: int, tau: int) -> float:
    """Invert :func:`p_from_delta_tau` in ``delta`` by bisection on ``delta^2``."""
    _check_prob("p", p)
    if p == 1.0:
        raise ValueError("p = 1 is not attainable with delta < 1")
    if not 1 <= tau <= d + 1:
        raise ValueError(f"tau must lie in [1, d+1], got {tau}")
    if p == 0.0:
        return 0.0
    if tau == d + 1:
        raise ValueError(f"infeasible: tau = d + 1 = {tau} forces p = 0, requested p = {p}")
    if tau == 1:
        return delta_from_p(p, d)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = p_from_delta_tau(math.sqrt(mid), d, tau)
        if abs(val - p) <= _BISECT_TOL:
            return math.sqrt(mid)
        if val < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-17:
            break
    return math.sqrt(0.5 * (lo + hi))


def planted_clique_density(n: int, t: int, q: float) -> float:
    """Edge marginal ``q + (1 - q) C(t,2)/C(n,2)`` of the planted clique graph."""
    return q + (1.0 - q) * comb(t, 2) / comb(n, 2)


# ---------------------------------------------------------------------------
# small sampling primitives


def uniform_subset(n: int, k: int, rng: np.random.Generator) -> list[int]:
    """Uniform ``k``-subset of ``range(n)`` by a partial Fisher-Yates shuffle."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    idx = list(range(n))
    for i in range(k):
        j = i + int(rng.integers(n - i))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]


def multinomial_counts(total: int, probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Multinomial draw by sequential conditional binomials."""
    probs = np.asarray(probs, dtype=float)
    out = np.zeros(probs.shape[0], dtype=np.int64)
    remaining = int(total)
    mass = 1.0
    for i, pi in enumerate(probs):
        if remaining == 0:
            break
        if i == probs.shape[0] - 1:
            out[i] = remaining
            break
        frac = 0.0 if mass <= 0.0 else min(1.0, max(0.0, pi / mass))
        k = int(rng.binomial(remaining, frac))
        out[i] = k
        remaining -= k
        mass -= pi
    return out


def _plant(rows: list[int], members: Iterable[int]) -> None:
    members = list(members)
    mask = 0
    for v in members:
        mask |= 1 << v
    for v in members:
        rows[v] |= mask & ~(1 << v)


# ---------------------------------------------------------------------------
# graph samplers


def sample_er(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdős–Rényi graph ``G(n, p)``."""
    _check_prob("p", p)
    bits = rng.random(comb(n, 2)) < p
    return Graph.from_upper_bits(n, bits)


def sample_latent_sets(n: int, d: int, delta: float, rng: np.random.Generator) -> LatentSets:
    _check_prob("delta", delta)
    return LatentSets(rng.random((n, d)) < delta)


def intersection_matrix(sets: LatentSets) -> IntersectionMatrix:
    """Pairwise intersection sizes, accumulated over column blocks."""
    n, d = sets.n, sets.d
    m = np.zeros((n, n), dtype=np.int64)
    block = max(1, 4_000_000 // max(n, 1))
    for s in range(0, d, block):
        chunk = sets.membership[:, s : s + block].astype(np.int64)
        m += chunk @ chunk.T
    np.fill_diagonal(m, 0)
    return IntersectionMatrix(m)


def threshold_matrix(m: IntersectionMatrix, tau: int) -> Graph:
    """Graph with ``{i,j}`` present iff ``M_ij >= tau``."""
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    adj = m.entries >= tau
    np.fill_diagonal(adj, False)
    return Graph.from_adjacency(adj)


def intersection_graph(sets: LatentSets, tau: int) -> Graph:
    """Graph with ``{i,j}`` present iff ``|S_i ∩ S_j| >= tau``."""
    return threshold_matrix(intersection_matrix(sets), tau)


def _clique_size_logprobs(n: int, delta: float) -> np.ndarray:
    """``log p_k`` with ``p_k = C(n,k) delta^k (1-delta)^(n-k)``, ``k = 0..n``."""
    ks = np.arange(n + 1)
    lc = np.array([math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) for k in ks])
    return lc + ks * math.log(delta) + (n - ks) * math.log1p(-delta)


def sample_rig_clique_union(n: int, d: int, p: float, rng: np.random.Generator) -> Graph:
    """Threshold-one intersection graph drawn as a union of cliques.

    Each ground element lands in a ``Bin(n, delta)`` number of sets; the
    counts of elements by membership size are ``Multinomial(d, p_0..p_n)`` and
    an element in ``k`` sets contributes a clique on a uniform ``k``-subset.
    """
    delta = delta_from_p(p, d)
    rows = [0] * n
    if delta == 0.0 or n < 2:
        return Graph._from_rows(n, rows)
    probs = np.exp(_clique_size_logprobs(n, delta))
    counts = multinomial_counts(d, probs, rng)
    for k in range(2, n + 1):
        for _ in range(int(counts[k])):
            _plant(rows, uniform_subset(n, k, rng))
    return Graph._from_rows(n, rows)


def sample_rig(
    n: int,
    d: int,
    p: float,
    tau: int,
    rng: np.random.Generator,
    *,
    method: str = "auto",
) -> Graph:
    """Random intersection graph with edge marginal ``p`` at threshold ``tau``.

    ``method`` is ``"incidence"`` (sample the sets), ``"clique_union"``
    (threshold one only) or ``"auto"``, which picks the clique union for
    threshold one once ``n * d`` exceeds 4096.
    """
    _check_prob("p", p)
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if p == 1.0:
        raise ValueError("p = 1 is infeasible for a random intersection graph")
    if tau > d + 1 or (tau == d + 1 and p > 0):
        raise ValueError(f"infeasible (p={p}, d={d}, tau={tau}): intersections never reach tau")
    if method == "auto":
        method = "clique_union" if tau == 1 and n * d > 4096 else "incidence"
    if method == "clique_union":
        if tau != 1:
            raise ValueError("the clique-union sampler only covers tau = 1")
        return sample_rig_clique_union(n, d, p, rng)
    if method != "incidence":
        raise ValueError(f"unknown method {method!r}")
    delta = delta_from_p_tau(p, d, tau)
    return intersection_graph(sample_latent_sets(n, d, delta, rng), tau)


def sample_planted_clique(n: int, t: int, q: float, rng: np.random.Generator) -> Graph:
    """``G(n, q)`` with a clique forced on a uniform ``t``-subset."""
    if not 2 <= t <= n:
        raise ValueError(f"need 2 <= t <= n, got t={t}, n={n}")
    _check_prob("q", q)
    rows = list(sample_er(n, q, rng).rows)
    _plant(rows, uniform_subset(n, t, rng))
    return Graph._from_rows(n, rows)


def sample_rim(n: int, d: int, delta: float, rng: np.random.Generator) -> IntersectionMatrix:
    """Random intersection matrix with membership probability ``delta``."""
    return intersection_matrix(sample_latent_sets(n, d, delta, rng))


def sample_poim(n: int, lam: float, rng: np.random.Generator) -> IntersectionMatrix:
    """Symmetric matrix with i.i.d. ``Poisson(lam)`` off-diagonal entries."""
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    return IntersectionMatrix.from_upper(n, rng.poisson(lam, comb(n, 2)))


def sample_poim_planted(n: int, t: int, lam: float, rng: np.random.Generator) -> IntersectionMatrix:
    """Poisson matrix with one added to every entry inside a uniform ``t``-subset."""
    if not 2 <= t <= n:
        raise ValueError(f"need 2 <= t <= n, got t={t}, n={n}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    m = sample_poim(n, lam, rng).entries.copy()
    s = np.array(uniform_subset(n, t, rng))
    block = np.ix_(s, s)
    m[block] += 1
    m[s, s] -= 1
    return IntersectionMatrix(m)


def poissonization_tv_bound(n: int, d: int, p: float) -> float:
    """``1 - p_0 - p_1``, which dominates the Poissonization total variation."""
    delta = delta_from_p(p, d)
    if delta == 0.0 or n < 2:
        return 0.0
    log_p01 = (n - 1) * math.log1p(-delta) + math.log1p((n - 1) * delta)
    return -math.expm1(log_p01)


def poissonized_pair_probability(n: int, d: int, p: float) -> float:
    """Edge probability from two-cliques alone, ``1 - exp(-d delta^2 (1-delta)^(n-2))``."""
    delta = delta_from_p(p, d)
    return -math.expm1(-d * delta * delta * (1.0 - delta) ** (n - 2))


def rig_poissonized_sample(
    n: int,
    d: int,
    p: float,
    rng: np.random.Generator,
    *,
    clique_sizes: Iterable[int] | None = None,
) -> Graph:
    """Poissonized random intersection graph.

    The number of planted cliques of size at least two is
    ``Poisson(d (1 - p_0 - p_1))`` and is split across sizes by
    ``Multinomial(X, gamma p_2, ..., gamma p_n)``.  Passing ``clique_sizes``
    keeps only plantings of those sizes.
    """
    delta = delta_from_p(p, d)
    rows = [0] * n
    if delta == 0.0 or n < 2:
        return Graph._from_rows(n, rows)
    rest = poissonization_tv_bound(n, d, p)
    x = int(rng.poisson(d * rest))
    if x == 0:
        return Graph._from_rows(n, rows)
    logs = _clique_size_logprobs(n, delta)[2:]
    split = multinomial_counts(x, np.exp(logs - math.log(rest)), rng)
    keep = None if clique_sizes is None else set(clique_sizes)
    for k, c in zip(range(2, n + 1), split):
        if keep is not None and k not in keep:
            continue
        for _ in range(int(c)):
            _plant(rows, uniform_subset(n, k, rng))
    return Graph._from_rows(n, rows)


# ---------------------------------------------------------------------------
# model specifications


class Ensemble(str, enum.Enum):
    ER = "ER"
    RIG = "RIG"
    RIG_TAU = "RIG_TAU"
    RIG_P = "RIG_P"
    PLANTED_CLIQUE = "PLANTED_CLIQUE"
    RIM = "RIM"
    POIM = "POIM"
    POIM_P = "POIM_P"
    RGG = "RGG"


def as_ensemble(tag: Ensemble | str) -> Ensemble:
    if isinstance(tag, Ensemble):
        return tag
    return Ensemble(str(tag).strip().upper())


# required, exactly-one-of, optional
_RULES: dict[Ensemble, tuple[frozenset, tuple[str, ...], frozenset]] = {
    Ensemble.ER: (frozenset({"n", "p"}), (), frozenset()),
    Ensemble.RIG: (frozenset({"n", "d"}), ("p", "delta"), frozenset({"tau"})),
    Ensemble.RIG_TAU: (frozenset({"n", "d", "tau"}), ("p", "delta"), frozenset()),
    Ensemble.RIG_P: (frozenset({"n", "d"}), ("p", "delta"), frozenset()),
    Ensemble.PLANTED_CLIQUE: (frozenset({"n", "t", "q"}), (), frozenset()),
    Ensemble.RIM: (frozenset({"n", "d"}), ("p", "delta"), frozenset()),
    Ensemble.POIM: (frozenset({"n", "lam"}), (), frozenset()),
    Ensemble.POIM_P: (frozenset({"n", "t", "lam"}), (), frozenset()),
    Ensemble.RGG: (frozenset({"n", "d", "p"}), (), frozenset()),
}

_INT_FIELDS = ("n", "d", "tau", "t")
_FLOAT_FIELDS = ("p", "delta", "q", "lam")
_ALIASES = {"lambda": "lam", "model": "model", "ensemble": "model"}


@dataclass(frozen=True)
class ModelSpec:
    """Tagged parameter set for one ensemble.

    Exactly the parameters the tag needs must be present; where both ``p``
    and ``delta`` could describe the model, exactly one of them is given.
    """

    model: Ensemble
    n: int | None = None
    d: int | None = None
    p: float | None = None
    delta: float | None = None
    tau: int | None = None
    t: int | None = None
    q: float | None = None
    lam: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", as_ensemble(self.model))
        required, one_of, optional = _RULES[self.model]
        present = {f.name for f in fields(self) if f.name != "model" and getattr(self, f.name) is not None}
        missing = required - present
        if missing:
            raise ValueError(f"{self.model.value} requires {sorted(missing)}")
        if one_of:
            given = [k for k in one_of if k in present]
            if len(given) != 1:
                raise ValueError(
                    f"{self.model.value} needs exactly one of {list(one_of)}, got {given or 'none'}"
                )
        extra = present - required - set(one_of) - optional
        if extra:
            raise ValueError(f"{self.model.value} does not take {sorted(extra)}")
        for k in _INT_FIELDS:
            v = getattr(self, k)
            if v is not None:
                if int(v) != v or v < 1:
                    raise ValueError(f"{k} must be a positive integer, got {v}")
                object.__setattr__(self, k, int(v))
        for k in ("p", "delta", "q"):
            v = getattr(self, k)
            if v is not None:
                _check_prob(k, float(v))
                object.__setattr__(self, k, float(v))
        if self.lam is not None:
            if self.lam < 0:
                raise ValueError(f"lam must be >= 0, got {self.lam}")
            object.__setattr__(self, "lam", float(self.lam))
        if self.model is Ensemble.RIG and self.tau not in (None, 1):
            raise ValueError("RIG uses tau = 1; use RIG_TAU for higher thresholds")
        if self.t is not None and self.n is not None and not 2 <= self.t <= self.n:
            raise ValueError(f"need 2 <= t <= n, got t={self.t}, n={self.n}")

    @property
    def threshold(self) -> int:
        return self.tau if self.tau is not None else 1

    def resolved_delta(self) -> float:
        """Membership probability for the latent-set ensembles."""
        if self.delta is not None:
            return self.delta
        if self.p is None or self.d is None:
            raise ValueError(f"{self.model.value} has no membership probability")
        return delta_from_p_tau(self.p, self.d, self.threshold)

    def resolved_p(self) -> float:
        """Edge marginal of the graph ensembles."""
        if self.model is Ensemble.PLANTED_CLIQUE:
            return planted_clique_density(self.n, self.t, self.q)
        if self.p is not None:
            return self.p
        if self.delta is not None:
            return p_from_delta_tau(self.delta, self.d, self.threshold)
        raise ValueError(f"{self.model.value} has no edge density")

    @property
    def is_matrix(self) -> bool:
        return self.model in (Ensemble.RIM, Ensemble.POIM, Ensemble.POIM_P)

    def sample(self, rng: np.random.Generator) -> Graph | IntersectionMatrix:
        m = self.model
        if m is Ensemble.ER:
            return sample_er(self.n, self.p, rng)
        if m in (Ensemble.RIG, Ensemble.RIG_TAU):
            if self.delta is not None:
                sets = sample_latent_sets(self.n, self.d, self.delta, rng)
                return intersection_graph(sets, self.threshold)
            return sample_rig(self.n, self.d, self.p, self.threshold, rng)
        if m is Ensemble.RIG_P:
            return rig_poissonized_sample(self.n, self.d, self.resolved_p(), rng)
        if m is Ensemble.PLANTED_CLIQUE:
            return sample_planted_clique(self.n, self.t, self.q, rng)
        if m is Ensemble.RIM:
            return sample_rim(self.n, self.d, self.resolved_delta(), rng)
        if m is Ensemble.POIM:
            return sample_poim(self.n, self.lam, rng)
        if m is Ensemble.POIM_P:
            return sample_poim_planted(self.n, self.t, self.lam, rng)
        if m is Ensemble.RGG:
            from .coupling_lab import sample_rgg

            return sample_rgg(self.n, self.d, self.p, rng)
        raise AssertionError(m)

    def to_mapping(self) -> dict[str, object]:
        out: dict[str, object] = {"model": self.model.value}
        for f in fields(self):
            if f.name != "model" and getattr(self, f.name) is not None:
                out[f.name] = getattr(self, f.name)
        return out

    def describe(self) -> str:
        body = ";".join(f"{k}={v}" for k, v in self.to_mapping().items() if k != "model")
        return f"{self.model.value}({body})"

    @classmethod
    def from_mapping(cls, items: Mapping[str, object]) -> "ModelSpec":
        """Build from string-valued ``key -> value`` pairs (config files, CLI)."""
        kwargs: dict[str, object] = {}
        for raw_key, raw_val in items.items():
            if raw_val is None:
                continue
            key = _ALIASES.get(raw_key.strip().lower(), raw_key.strip().lower())
            if key == "model":
                kwargs["model"] = str(raw_val).strip().upper()
            elif key in _INT_FIELDS:
                f = float(raw_val)
                if f != int(f):
                    raise ValueError(f"{key} must be an integer, got {raw_val}")
                kwargs[key] = int(f)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = float(raw_val)
            else:
                raise ValueError(f"unknown parameter {raw_key!r}")
        if "model" not in kwargs:
            raise ValueError("missing 'model'")
        return cls(**kwargs)

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """Parse ``key=value`` pairs separated by newlines, commas or semicolons."""
        items: dict[str, str] = {}
        for line in text.replace(";", "\n").replace(",", "\n").splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {line!r}")
            k, v = line.split("=", 1)
            k = k.strip()
            if k in items:
                raise ValueError(f"duplicate key {k!r}")
            items[k] = v.strip()
        return cls.from_mapping(items)

    @classmethod
    def from_config_file(cls, path: str | Path) -> "ModelSpec":
        return cls.parse(Path(path).read_text())
