"""Exact triangle and signed-triangle moments for intersection graphs and ``G(n, p)``.

Notation: ``tau_ijk = (e_ij - p)(e_ik - p)(e_jk - p)`` so that
``T_s = sum_{i<j<k} tau_ijk``.  ``Q(x)`` is the probability that every edge
whose bit in ``x`` is zero is absent.  All ``d``-th powers are evaluated as
``exp(d * log1p(.))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np
from scipy import stats

_MAX_ENUM = 20


@dataclass(frozen=True)
class TriangleMoments:
    n: int
    d: int | None
    delta: float | None
    p: float
    mean_signed: float
    var_signed: float
    mean_plain: float

    def __post_init__(self) -> None:
        if self.var_signed < 0:
            raise ValueError(f"negative variance {self.var_signed}")


def _pow_d(small: float, d: int) -> float:
    """``(1 + small)^d``."""
    if small <= -1.0:
        return 0.0 if small == -1.0 and d > 0 else float("nan")
    return math.exp(d * math.log1p(small))


def _check_delta(delta: float, allow_one: bool = False) -> None:
    hi_ok = delta <= 1.0 if allow_one else delta < 1.0
    if not (0.0 <= delta and hi_ok):
        raise ValueError(f"delta must lie in [0, 1{']' if allow_one else ')'}, got {delta}")


def edge_density(d: int, delta: float) -> float:
    """``p = 1 - (1 - delta^2)^d``."""
    return -math.expm1(d * math.log1p(-delta * delta)) if delta < 1 else 1.0


# ---------------------------------------------------------------------------
# survival tables


def q_survival(d: int, delta: float, x: Sequence[int]) -> float:
    """``Q(x)`` on a triangle with edges ordered ``(12, 13, 23)``."""
    _check_delta(delta, allow_one=True)
    k = sum(int(b) for b in x)
    if len(x) != 3 or any(b not in (0, 1) for b in x):
        raise ValueError(f"x must be three bits, got {x}")
    dl = delta
    if k == 0:
        return _pow_d(-3 * dl**2 + 2 * dl**3, d)  # (1+2δ)(1-δ)^2
    if k == 1:
        return _pow_d(-2 * dl**2 + dl**3, d)  # (1-δ)(1+δ-δ^2)
    if k == 2:
        return _pow_d(-(dl**2), d)  # (1-δ)(1+δ)
    return 1.0


# edge order for the two triangles 123 and 124 sharing edge 12
SHARED_EDGE_ORDER = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4))


def q_prime_survival(d: int, delta: float, x: Sequence[int]) -> float:
    """``Q'(x)`` over the five edges ``(12, 13, 14, 23, 24)`` of two triangles sharing ``12``."""
    _check_delta(delta, allow_one=True)
    x = tuple(int(b) for b in x)
    if len(x) != 5 or any(b not in (0, 1) for b in x):
        raise ValueError(f"x must be five bits, got {x}")
    dl = delta
    k = sum(x)
    if k == 0:
        return _pow_d(-5 * dl**2 + 6 * dl**3 - 2 * dl**4, d)  # (1+2δ-2δ^2)(1-δ)^2
    if k == 1:
        return _pow_d(-4 * dl**2 + 4 * dl**3 - dl**4, d)  # (1+2δ-δ^2)(1-δ)^2
    if k == 2:
        if x in ((0, 1, 1, 0, 0), (0, 0, 0, 1, 1)):
            return _pow_d(-3 * dl**2 + 3 * dl**3 - dl**4, d)  # (1+δ-2δ^2+δ^3)(1-δ)
        return _pow_d(-3 * dl**2 + 2 * dl**3, d)  # (1+2δ)(1-δ)^2
    if k == 3:
        if x in ((1, 1, 0, 0, 1), (1, 0, 1, 1, 0)):
            return _pow_d(dl**4 - 2 * dl**2, d)  # (1+δ)^2(1-δ)^2
        return _pow_d(-2 * dl**2 + dl**3, d)  # (1+δ-δ^2)(1-δ)
    if k == 4:
        return _pow_d(-(dl**2), d)
    return 1.0


def absent_edges_survival(d: int, delta: float, vertices: Sequence[int], absent: Sequence[tuple[int, int]]) -> float:
    """Probability that every listed edge is absent in the threshold-one graph.

    Elements of ``[d]`` are independent; one element breaks the event iff it
    lies in both endpoints of some listed edge, so the per-element factor is
    the weighted count of member sets that are independent in ``absent``.
    """
    vs = list(vertices)
    per = 0.0
    for r in range(len(vs) + 1):
        for u in itertools.combinations(vs, r):
            su = set(u)
            if any(a in su and b in su for a, b in absent):
                continue
            per += delta**r * (1 - delta) ** (len(vs) - r)
    return _pow_d(per - 1.0, d)


# ---------------------------------------------------------------------------
# per-triple moments


def tau_mean(d: int, delta: float) -> float:
    """``E[tau_123]`` in the closed form ``(1-p)^3 [-2 + 3(1+D1)^d - (1+D2)^d]``."""
    _check_delta(delta)
    dl = delta
    p = edge_density(d, dl)
    d1 = dl**3 / ((1 - dl * dl) * (1 + dl))
    d2 = (2 * dl**3 + dl**4) / ((1 - dl * dl) * (1 + dl) ** 2)
    bracket = 3 * math.expm1(d * math.log1p(d1)) - math.expm1(d * math.log1p(d2))
    return (1 - p) ** 3 * bracket


def tau_mean_expansion(d: int, delta: float) -> float:
    """``E[tau_123] = -sum_x (-1)^|x| (1-p)^|x| Q(x)``."""
    p = edge_density(d, delta)
    return -math.fsum(
        (-1) ** sum(x) * (1 - p) ** sum(x) * q_survival(d, delta, x) for x in itertools.product((0, 1), repeat=3)
    )


def tau_second_moment(d: int, delta: float) -> float:
    """``E[tau_123^2] = -sum_x (-1)^|x| (1-p)^(2|x|) (1-2p)^(3-|x|) Q(x)``."""
    _check_delta(delta)
    p = edge_density(d, delta)
    return -math.fsum(
        (-1) ** sum(x) * (1 - p) ** (2 * sum(x)) * (1 - 2 * p) ** (3 - sum(x)) * q_survival(d, delta, x)
        for x in itertools.product((0, 1), repeat=3)
    )


def tau_shared_edge_moment(d: int, delta: float) -> float:
    """``E[tau_123 tau_124]`` from the five-edge table ``Q'``; edge ``12`` is squared."""
    _check_delta(delta)
    p = edge_density(d, delta)
    terms = []
    for x in itertools.product((0, 1), repeat=5):
        k = sum(x)
        coef = (1 - p) ** (2 * x[0]) * (1 - 2 * p) ** (1 - x[0]) * (1 - p) ** (k - x[0])
        terms.append((-1) ** k * coef * q_prime_survival(d, delta, x))
    return -math.fsum(terms)


def size_mgf(d: int, delta: float, alpha: int, beta: int) -> float:
    """``E[(1-delta)^(alpha m) (1-delta^2)^(beta (d-m))]`` for ``m ~ Bin(d, delta)``.

    Equals ``(delta (1-delta)^alpha + (1-delta)(1-delta^2)^beta)^d``.
    """
    small = delta * math.expm1(alpha * math.log1p(-delta)) + (1 - delta) * math.expm1(
        beta * math.log1p(-delta * delta)
    )
    return _pow_d(small, d)


def shared_vertex_terms(d: int, delta: float) -> list[tuple[float, int, int, float]]:
    """Terms ``(coefficient, alpha, beta, E[a^alpha b^beta])`` of ``E[tau_123 tau_145]``.

    Given ``|S_1| = m`` the two triangles are independent and, with
    ``a = (1-delta)^m``, ``b = (1-delta^2)^(d-m)`` and ``P = 1 - p``,
    ``tau^m = -2P^2 a + 2P ab + P a^2 - a^2 b``.  Squaring and collecting
    powers leaves nine binomial moment-generating terms.
    """
    _check_delta(delta)
    P = 1 - edge_density(d, delta)
    coeffs = {
        (2, 0): 4 * P**4,
        (2, 1): -8 * P**3,
        (3, 0): -4 * P**3,
        (3, 1): 8 * P**2,
        (2, 2): 4 * P**2,
        (3, 2): -4 * P,
        (4, 0): P**2,
        (4, 1): -2 * P,
        (4, 2): 1.0,
    }
    return [(c, a, b, size_mgf(d, delta, a, b)) for (a, b), c in coeffs.items()]


def tau_shared_vertex_moment(d: int, delta: float) -> float:
    """``E[tau_123 tau_145] = E_{m ~ Bin(d, delta)}[(tau^m)^2]``."""
    return math.fsum(c * v for c, _, _, v in shared_vertex_terms(d, delta))


def tau_conditional_on_size(d: int, delta: float, m):
    """``tau^m = E[tau_123 | |S_1| = m]``; ``m`` may be an array.

    The survival factor with only edge ``23`` forbidden is ``(1-delta^2)^d``:
    elements of ``S_1`` may not sit in both ``S_2`` and ``S_3`` either.  The
    expanded form ``-2P^2 a + 2P ab + P a^2 - a^2 b`` factors as
    ``a (P - b)(a - 2P)``, evaluated here without the cancellation.
    """
    _check_delta(delta)
    m = np.asarray(m, dtype=float)
    P = 1 - edge_density(d, delta)
    log_b = (d - m) * math.log1p(-delta * delta)
    a = np.exp(m * math.log1p(-delta))
    # P - b = b ((1 - delta^2)^m - 1)
    p_minus_b = np.exp(log_b) * np.expm1(m * math.log1p(-delta * delta))
    out = a * p_minus_b * (a - 2 * P)
    return float(out) if out.ndim == 0 else out


def tau_shared_vertex_cov(d: int, delta: float) -> float:
    """``Cov[tau_123, tau_145] = Var_m(tau^m)`` for ``m ~ Bin(d, delta)``.

    Summed term by term over ``m`` (all terms nonnegative), which avoids the
    cancellation in ``E[tau_123 tau_145] - E[tau_123]^2``.  Only the window
    ``mean +- (40 sd + 10)`` is summed; ``|tau^m| <= 2`` bounds what is dropped.
    """
    _check_delta(delta)
    mu = d * delta
    half = 40 * math.sqrt(mu * (1 - delta)) + 10
    m = np.arange(max(0, math.floor(mu - half)), min(d, math.ceil(mu + half)) + 1)
    w = stats.binom.pmf(m, d, delta)
    tm = tau_conditional_on_size(d, delta, m)
    mean = math.fsum((w * tm).tolist())
    return math.fsum((w * (tm - mean) ** 2).tolist())


# ---------------------------------------------------------------------------
# graph-level moments


def rig_signed_triangle_mean(n: int, d: int, delta: float) -> float:
    """``E[T_s]`` under the threshold-one intersection graph."""
    _check_delta(delta)
    if n < 3:
        return 0.0
    return comb(n, 3) * tau_mean(d, delta)


def rig_signed_triangle_var(n: int, d: int, delta: float) -> float:
    """``Var[T_s]`` as a sum of covariances over ordered pairs of triples.

    Pairs sharing three, two and one vertex contribute ``C(n,3)``,
    ``12 C(n,4)`` and ``30 C(n,5)`` times the per-pair covariance; disjoint
    triples are independent.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    _check_delta(delta)
    q = tau_mean(d, delta)
    q2 = q * q
    v = comb(n, 3) * (tau_second_moment(d, delta) - q2)
    if n >= 4:
        # ordered pairs of triples sharing two vertices: 4!/(2!1!1!) per 4-set
        v += 12 * comb(n, 4) * (tau_shared_edge_moment(d, delta) - q2)
    if n >= 5:
        v += 30 * comb(n, 5) * tau_shared_vertex_cov(d, delta)
    # clip rounding noise only
    return max(v, 0.0) if v > -1e-12 * comb(n, 3) else v


def triangle_probability(d: int, delta: float) -> float:
    """``P[T_123 = 1] = sum_x (-1)^(3-|x|) Q(x)``."""
    _check_delta(delta, allow_one=True)
    if delta == 1.0:
        return 1.0
    return math.fsum(
        (-1) ** (3 - sum(x)) * q_survival(d, delta, x) for x in itertools.product((0, 1), repeat=3)
    )


def rig_triangle_mean(n: int, d: int, delta: float) -> float:
    """``E[T]``, the expected number of triangles."""
    if n < 3:
        return 0.0
    return comb(n, 3) * triangle_probability(d, delta)


def rig_moments(n: int, d: int, delta: float) -> TriangleMoments:
    return TriangleMoments(
        n=n,
        d=d,
        delta=delta,
        p=edge_density(d, delta),
        mean_signed=rig_signed_triangle_mean(n, d, delta),
        var_signed=rig_signed_triangle_var(n, d, delta),
        mean_plain=rig_triangle_mean(n, d, delta),
    )


def er_counts(n: int, p: float) -> TriangleMoments:
    """Exact triangle moments of ``G(n, p)``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    c = comb(n, 3)
    return TriangleMoments(
        n=n,
        d=None,
        delta=None,
        p=p,
        mean_signed=0.0,
        var_signed=c * p**3 * (1 - p) ** 3,
        mean_plain=c * p**3,
    )


def rig_snr(n: int, d: int, delta: float) -> float:
    """``E[T_s] / sqrt(Var[T_s])``."""
    var = rig_signed_triangle_var(n, d, delta)
    if not var > 0:
        raise ValueError(f"signal-to-noise undefined at zero variance (n={n}, d={d}, delta={delta})")
    return rig_signed_triangle_mean(n, d, delta) / math.sqrt(var)


def detection_threshold(n: int, d: int, p: float) -> float:
    """``C(n,3)(1-p)^3 d delta^3 / 2``, the cut-off of the signed-triangle test."""
    from .latent_models import delta_from_p

    delta = delta_from_p(p, d)
    return 0.5 * comb(n, 3) * (1 - p) ** 3 * d * delta**3


def enumeration_cap() -> int:
    """Largest ``n * d`` accepted by the membership-pattern enumerators."""
    return _MAX_ENUM
