"""Random geometric graphs on the sphere and the Gram-Schmidt coupling of ``X_1``.

Given ``X_2..X_n``, reverse Gram-Schmidt produces orthonormal ``Y_n..Y_2``
with ``Y_n = X_n``.  A fresh uniform ``X_1`` is then written as
``X_1 = sum_i T_i Y_i`` where ``T_i = Gamma_i prod_{j>i} sqrt(1 - Gamma_j^2)``,
``Gamma_i ~ psi_{d-n+i}`` independently and ``Y_1`` is uniform on the unit
sphere of the orthogonal complement.  The edge ``{1,2}`` is present iff
``Gamma_2 >= t'``, so its conditional probability given everything else is
``Q_0 = Psi_{d-n+2}(t')``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .graph_core import Graph
from .sphere_math import psi_tail, sample_psi, sample_psi_plus, threshold_t

_UNIT_TOL = 1e-10
_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpherePointSet:
    """``n`` unit vectors in ``R^d``, stored as the rows of ``points``."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a nonempty n x d array, got shape {pts.shape}")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
            raise ValueError(f"points must have unit norm; worst deviation {np.max(np.abs(norms - 1.0)):.3g}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def gram(self) -> np.ndarray:
        return self.points @ self.points.T

    def replace(self, index: int, x: np.ndarray) -> "SpherePointSet":
        """Copy with the 0-based row ``index`` replaced by ``x``."""
        pts = self.points.copy()
        pts[index] = x
        return SpherePointSet(pts)


def _normalized_gaussians(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        z = rng.standard_normal((n, d))
        norms = np.linalg.norm(z, axis=1)
        if np.all(norms > 0):
            return z / norms[:, None]


def sample_sphere_points(n: int, d: int, rng: np.random.Generator) -> SpherePointSet:
    """``n`` i.i.d. Haar points on ``S^{d-1}`` as normalized standard Gaussians."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    return SpherePointSet(_normalized_gaussians(n, d, rng))


def geometric_graph(pts: SpherePointSet, t: float) -> Graph:
    """Edge ``{i,j}`` iff ``<X_i, X_j> >= t``."""
    return Graph.from_adjacency(pts.gram() >= t)


def sample_rgg(n: int, d: int, p: float, rng: np.random.Generator) -> Graph:
    """Random geometric graph with edge marginal ``p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    return geometric_graph(sample_sphere_points(n, d, rng), threshold_t(p, d))


# ---------------------------------------------------------------------------
# the coupling


@dataclass(frozen=True, eq=False)
class CouplingState:
    """Everything the coupling of ``X_1`` against ``X_2..X_n`` produces.

    Arrays indexed by vertex hold that vertex at position ``i - 1``, so
    ``basis[0]`` is ``Y_1``, ``gammas[1]`` is ``Gamma_2`` and ``gammas[0]``
    is unused (``nan``).  ``coeffs[j - 1] = a_{2j}`` for ``j >= 2``.
    """

    others: SpherePointSet
    basis: np.ndarray
    gammas: np.ndarray
    t_values: np.ndarray
    coeffs: np.ndarray

    @property
    def n(self) -> int:
        return self.others.n + 1

    @property
    def d(self) -> int:
        return self.others.d

    @property
    def a22(self) -> float:
        return float(self.coeffs[1])

    def x1(self) -> np.ndarray:
        return self.t_values @ self.basis

    def points(self) -> SpherePointSet:
        return SpherePointSet(np.vstack([self.x1()[None, :], self.others.points]))

    def check(self) -> None:
        """Assert the orthonormality, telescoping and positivity invariants."""
        g = self.basis @ self.basis.T
        if np.max(np.abs(g - np.eye(self.n))) > 1e-8:
            raise AssertionError("basis is not orthonormal")
        if abs(math.fsum((self.t_values**2).tolist()) - 1.0) > _UNIT_TOL:
            raise AssertionError("sum of T_i^2 differs from 1")
        if not self.a22 > 0:
            raise AssertionError("a_22 must be positive")


def reverse_gram_schmidt(x: np.ndarray) -> np.ndarray:
    """Orthonormalize the rows of ``x`` from the last to the first.

    Row ``k`` of the result spans the same flag as rows ``k..`` of ``x``.  Each
    projection is applied twice (classical Gram-Schmidt with one
    re-orthogonalization pass).
    """
    x = np.asarray(x, dtype=float)
    m, d = x.shape
    if m > d:
        raise ValueError(f"cannot orthonormalize {m} vectors in R^{d}")
    y = np.zeros_like(x)
    for k in range(m - 1, -1, -1):
        v = x[k].copy()
        norm0 = np.linalg.norm(v)
        done = y[k + 1 :]
        for _ in range(2):
            v -= done.T @ (done @ v)
        norm = np.linalg.norm(v)
        if norm0 == 0 or norm <= _RANK_TOL * norm0:
            cond = np.linalg.cond(x)
            raise np.linalg.LinAlgError(
                f"vectors are numerically dependent at row {k} "
                f"(residual {norm:.3g}, condition number {cond:.3g})"
            )
        y[k] = v / norm
    return y


def _complement_direction(span: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform unit vector orthogonal to the orthonormal rows of ``span``."""
    d = span.shape[1]
    while True:
        z = rng.standard_normal(d)
        for _ in range(2):
            z -= span.T @ (span @ z)
        norm = np.linalg.norm(z)
        if norm > _RANK_TOL:
            return z / norm


def t_values_from_gammas(gammas: np.ndarray) -> np.ndarray:
    """``T_1..T_n`` from ``Gamma_2..Gamma_n`` (``gammas[0]`` ignored)."""
    g = np.asarray(gammas, dtype=float)
    n = g.size
    t = np.empty(n)
    tail = 1.0  # prod_{j > i} sqrt(1 - Gamma_j^2)
    for i in range(n - 1, 0, -1):
        t[i] = g[i] * tail
        tail *= math.sqrt(max(0.0, 1.0 - g[i] * g[i]))
    t[0] = tail
    return t


def sample_gammas(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``Gamma_i ~ psi_{d-n+i}`` for ``i = 2..n``; entry 0 is ``nan``."""
    g = np.full(n, np.nan)
    for i in range(2, n + 1):
        g[i - 1] = sample_psi(d - n + i, rng)
    return g


def build_coupling(
    x2_to_xn: SpherePointSet,
    rng: np.random.Generator,
    gammas: np.ndarray | None = None,
) -> tuple[CouplingState, np.ndarray]:
    """Couple a fresh uniform ``X_1`` to the given ``X_2..X_n``.

    ``gammas`` (length ``n``, entry 0 ignored) overrides the sampled
    ``Gamma_i``.  Returns the state and ``X_1``.
    """
    n, d = x2_to_xn.n + 1, x2_to_xn.d
    if d < n:
        raise ValueError(f"coupling needs d >= n, got n={n}, d={d}")
    x = x2_to_xn.points
    upper = reverse_gram_schmidt(x)  # rows are Y_2..Y_n
    y1 = _complement_direction(upper, rng)
    basis = np.vstack([y1[None, :], upper])
    if gammas is None:
        g = sample_gammas(n, d, rng)
    else:
        g = np.array(gammas, dtype=float)
        if g.shape != (n,):
            raise ValueError(f"gammas must have length n={n}")
        if np.any(np.abs(g[1:]) > 1):
            raise ValueError("gammas must lie in [-1, 1]")
        g[0] = np.nan
    t = t_values_from_gammas(g)
    coeffs = np.full(n, np.nan)
    coeffs[2:] = upper[1:] @ x[0]
    coeffs[1] = math.sqrt(max(0.0, 1.0 - math.fsum((coeffs[2:] ** 2).tolist())))
    state = CouplingState(others=x2_to_xn, basis=basis, gammas=g, t_values=t, coeffs=coeffs)
    if not state.a22 > 0:
        raise np.linalg.LinAlgError("a_22 vanished: X_2 lies in the span of X_3..X_n")
    return state, state.x1()


def conditional_threshold(state: CouplingState, t_pd: float) -> float:
    """``t' = (t - sum_{j>=3} a_2j T_j) / (a_22 prod_{j>=3} sqrt(1 - Gamma_j^2))``."""
    a = state.coeffs
    t = state.t_values
    g = state.gammas
    shift = math.fsum((a[2:] * t[2:]).tolist())
    den = state.a22 * math.prod(math.sqrt(1.0 - gj * gj) for gj in g[2:])
    if not den > 0:
        raise ZeroDivisionError(f"conditional threshold denominator is {den}")
    return (t_pd - shift) / den


def q0(d: int, n: int, t_prime: float) -> float:
    """``Q_0 = Psi_{d-n+2}(t')`` with ``t'`` clamped to ``[-1, 1]``."""
    if d - n + 2 < 2:
        raise ValueError(f"need d - n + 2 >= 2, got d={d}, n={n}")
    return float(psi_tail(d - n + 2, min(1.0, max(-1.0, t_prime))))


def first_vertex_far_edges(x2_to_xn: SpherePointSet, gammas_tail: np.ndarray, t: float) -> dict[int, bool]:
    """Edges ``{1, j}``, ``j >= 3``, rebuilt from ``X_2..X_n`` and ``Gamma_3..Gamma_n`` only.

    ``X_j`` lies in ``span(Y_j..Y_n)``, so ``<X_1, X_j>`` involves only
    ``T_j..T_n``, which in turn involve only ``Gamma_j..Gamma_n``.
    """
    n = x2_to_xn.n + 1
    g = np.asarray(gammas_tail, dtype=float)
    if g.shape != (n - 2,):
        raise ValueError(f"expected {n - 2} values Gamma_3..Gamma_n")
    upper = reverse_gram_schmidt(x2_to_xn.points)
    # T_j for j >= 3 from the product over later gammas
    tvals = np.empty(n - 2)
    tail = 1.0
    for k in range(n - 3, -1, -1):
        tvals[k] = g[k] * tail
        tail *= math.sqrt(max(0.0, 1.0 - g[k] * g[k]))
    x1_part = tvals @ upper[1:]
    out = {}
    for j in range(3, n + 1):
        out[j] = bool(float(x1_part @ x2_to_xn.points[j - 2]) >= t)
    return out


# ---------------------------------------------------------------------------
# sparse re-coupling


def sparse_recouple_x2(pts: SpherePointSet, p: float, rng: np.random.Generator) -> SpherePointSet:
    """Replace ``X_2`` by ``(tau, gamma X_22, ..., gamma X_2d)`` with ``tau ~ psi^+_{d,p}``.

    Requires ``X_1 = e_1``.  ``gamma = sqrt((1 - tau^2)/(1 - X_21^2))`` keeps
    the new point on the sphere.
    """
    if pts.n < 2:
        raise ValueError("need at least two points")
    d = pts.d
    e1 = np.zeros(d)
    e1[0] = 1.0
    if np.max(np.abs(pts.points[0] - e1)) > _UNIT_TOL:
        raise ValueError("sparse re-coupling assumes X_1 = e_1")
    x2 = pts.points[1]
    rest = 1.0 - x2[0] * x2[0]
    if not rest > 0:
        raise ValueError("|X_21| = 1; resample X_2 before re-coupling")
    tau = sample_psi_plus(d, p, rng)
    gamma = math.sqrt((1.0 - tau * tau) / rest)
    new = np.empty(d)
    new[0] = tau
    new[1:] = gamma * x2[1:]
    return pts.replace(1, new)


def _pinned_points(n: int, d: int, rng: np.random.Generator) -> SpherePointSet:
    pts = np.empty((n, d))
    pts[0] = 0.0
    pts[0, 0] = 1.0
    pts[1:] = _normalized_gaussians(n - 1, d, rng)
    return SpherePointSet(pts)


def sample_recoupled_rgg(n: int, d: int, p: float, rng: np.random.Generator) -> Graph:
    """RGG with ``X_1 = e_1`` after re-coupling ``X_2``; edge ``{1,2}`` is always present."""
    pts = _pinned_points(n, d, rng)
    return geometric_graph(sparse_recouple_x2(pts, p, rng), threshold_t(p, d))


def sample_rgg_given_edge(n: int, d: int, p: float, rng: np.random.Generator, max_tries: int = 100000) -> Graph:
    """RGG conditioned on edge ``{1,2}`` by rejection of whole draws."""
    t = threshold_t(p, d)
    for _ in range(max_tries):
        g = geometric_graph(sample_sphere_points(n, d, rng), t)
        if g.has_edge(1, 2):
            return g
    raise RuntimeError(f"no draw with edge {{1,2}} in {max_tries} tries")


# ---------------------------------------------------------------------------
# Monte Carlo of Q_0


@dataclass(frozen=True)
class QDeviation:
    """Monte Carlo moments of ``Q_0 - p`` over independent couplings."""

    n: int
    d: int
    p: float
    draws: int
    mean_q0: float
    se_q0: float
    mean_abs: float
    se_abs: float
    mean_sq: float
    se_sq: float

    @property
    def kl_surrogate(self) -> float:
        """``C(n,2) E[(Q_0 - p)^2] / (p(1-p))``."""
        return comb(self.n, 2) * self.mean_sq / (self.p * (1 - self.p))


def draw_q0(n: int, d: int, p: float, rng: np.random.Generator, t_pd: float | None = None) -> tuple[float, CouplingState]:
    """One coupling draw and its ``Q_0``."""
    t_pd = threshold_t(p, d) if t_pd is None else t_pd
    state, _ = build_coupling(sample_sphere_points(n - 1, d, rng), rng)
    return q0(d, n, conditional_threshold(state, t_pd)), state


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def estimate_q_deviation(n: int, d: int, p: float, m: int, rng: np.random.Generator) -> QDeviation:
    """Estimate ``E[Q_0]``, ``E|Q_0 - p|`` and ``E(Q_0 - p)^2`` from ``m`` couplings."""
    if not d >= n >= 3:
        raise ValueError(f"need d >= n >= 3, got n={n}, d={d}")
    if m < 100:
        raise ValueError(f"m must be >= 100, got {m}")
    t_pd = threshold_t(p, d)
    q = np.array([draw_q0(n, d, p, rng, t_pd)[0] for _ in range(m)])
    dev = q - p
    mq, sq = _mean_se(q)
    ma, sa = _mean_se(np.abs(dev))
    ms, ss = _mean_se(dev * dev)
    return QDeviation(n, d, p, m, mq, sq, ma, sa, ms, ss)
