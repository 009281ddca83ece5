"""Marginal law of one coordinate of a uniform point on the sphere ``S^{d-1}``.

``psi_d(x) = Gamma(d/2) / (Gamma((d-1)/2) sqrt(pi)) * (1 - x^2)^((d-3)/2)`` on
``[-1, 1]``.  The squared coordinate is ``Beta(1/2, (d-1)/2)``, which gives
the tail through the regularized incomplete beta function.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

_EDGE_EPS = 1e-15
_INVERSE_CDF_BELOW = 1e-3


@dataclass(frozen=True)
class SphereParams:
    d: int

    def __post_init__(self) -> None:
        _check_d(self.d)


def _check_d(d: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d}")


def log_psi_normalizer(d: int) -> float:
    """``log(Gamma(d/2) / (Gamma((d-1)/2) sqrt(pi)))``."""
    _check_d(d)
    return math.lgamma(d / 2) - math.lgamma((d - 1) / 2) - 0.5 * math.log(math.pi)


def psi_density(d: int, x):
    """Density ``psi_d(x)``; accepts scalars or arrays."""
    _check_d(d)
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1) or np.any(np.isnan(xa)):
        raise ValueError("psi_d is supported on [-1, 1]")
    if d == 2 and np.any(np.abs(xa) == 1):
        raise ValueError("psi_2 is singular at x = +-1")
    c = log_psi_normalizer(d)
    if d == 3:
        out = np.full_like(xa, math.exp(c))
    else:
        with np.errstate(divide="ignore"):
            out = np.exp(c + 0.5 * (d - 3) * np.log1p(-xa * xa))
    return float(out) if np.ndim(out) == 0 else out


def _tail_scalar(d: int, x: float) -> float:
    if x <= -1.0:
        return 1.0
    if x >= 1.0:
        return 0.0
    if x < 0:
        return 1.0 - _tail_scalar(d, -x)
    # P[X >= x] = P[X^2 >= x^2] / 2 for x >= 0
    v = 0.5 * float(special.betaincc(0.5, 0.5 * (d - 1), x * x))
    if math.isfinite(v):
        return v
    val, _ = integrate.quad(lambda u: psi_density(d, u), x, 1.0, epsabs=1e-12, limit=200)
    return val


def psi_tail(d: int, x):
    """Upper tail ``Psi_d(x) = P[X_1 >= x]``; endpoints map to 1 and 0."""
    _check_d(d)
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1) or np.any(np.isnan(xa)):
        raise ValueError("Psi_d is defined on [-1, 1]")
    if xa.ndim == 0:
        return _tail_scalar(d, float(xa))
    return np.array([_tail_scalar(d, float(v)) for v in xa.ravel()]).reshape(xa.shape)


def threshold_t(p: float, d: int) -> float:
    """The unique ``t`` with ``Psi_d(t) = p``, by bisection."""
    _check_d(d)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    lo, hi = -1.0 + _EDGE_EPS, 1.0 - _EDGE_EPS
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        val = _tail_scalar(d, mid)
        if abs(val - p) <= 1e-13:
            return mid
        if val > p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2 * math.ulp(max(abs(lo), abs(hi), 1e-300)):
            break
    mid = 0.5 * (lo + hi)
    if abs(_tail_scalar(d, mid) - p) > 1e-12:
        # near +-1 one ulp of t can move Psi_d by more than the tolerance
        warnings.warn(
            f"threshold_t({p}, {d}) is not resolvable to 1e-12 in double precision",
            RuntimeWarning,
            stacklevel=2,
        )
    return mid


def gaussian_tail(x):
    """Standard normal upper tail ``P[N(0,1) >= x]``."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def sample_psi(d: int, rng: np.random.Generator, size=None):
    """Draw from ``psi_d`` as the first coordinate of a normalized Gaussian vector.

    The remaining ``d - 1`` coordinates only enter through their squared norm,
    so ``Z_1 / sqrt(Z_1^2 + chi^2_{d-1})`` is used.
    """
    _check_d(d)
    z = rng.standard_normal(size)
    r = rng.chisquare(d - 1, size)
    return z / np.sqrt(z * z + r)


def _inverse_tail(d: int, target: float, lo: float) -> float:
    hi = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _tail_scalar(d, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * math.ulp(hi):
            break
    return 0.5 * (lo + hi)


def sample_psi_plus(d: int, p: float, rng: np.random.Generator, size=None):
    """Draw from ``psi_d`` conditioned on exceeding ``t_{p,d}``.

    Rejection from :func:`sample_psi` for ``p >= 1e-3``, otherwise inverse
    CDF by bisection on the tail.
    """
    t = threshold_t(p, d)
    count = 1 if size is None else int(np.prod(size))
    if p >= _INVERSE_CDF_BELOW:
        out = np.empty(0)
        while out.size < count:
            need = count - out.size
            batch = sample_psi(d, rng, max(16, int(1.2 * need / p)))
            out = np.concatenate([out, batch[batch >= t][:need]])
    else:
        u = rng.random(count)
        out = np.array([_inverse_tail(d, p * ui, t) for ui in u])
    if size is None:
        return float(out[0])
    return out.reshape(size)


def psi_plus_mean(d: int, p: float) -> float:
    """``E[X | X >= t_{p,d}]`` in closed form.

    ``int_t^1 x psi_d(x) dx = c_d (1 - t^2)^((d-1)/2) / (d - 1)``.
    """
    t = threshold_t(p, d)
    return math.exp(log_psi_normalizer(d) + 0.5 * (d - 1) * math.log1p(-t * t)) / ((d - 1) * p)
