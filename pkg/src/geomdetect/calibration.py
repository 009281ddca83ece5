"""Frozen constants for the inequalities whose constants are left unspecified.

Each ``required_*`` function returns the smallest constant that makes the
inequality hold at one point (or the largest, for lower-side constants).
``scripts/calibrate_constants.py`` evaluates them on a calibration grid,
takes the extreme value and rounds it outward with a 25% margin; the
results are frozen below.  Tests re-check the inequalities with these
constants on different, denser grids.
"""

from __future__ import annotations

import math
from math import comb

from .divergences import chi2_planted_clique, chi2_poim_planted
from .sphere_math import gaussian_tail, psi_density, psi_tail, threshold_t

MARGIN = 1.25

# t_{p,d} <= C sqrt(log(1/p)/d) and the matching lower bracket, p <= 1/2
PSI_THRESHOLD_C = 1.6
# psi_d(t_{p,d}) <= C1 p max(sqrt(d), d t_{p,d}), p <= 1/2
PSI_DENSITY_C1 = 5.8
# P(|T| > C sqrt(log(1/p)/d)) <= 2p, p <= 1/2
PSI_TAIL_C = 1.6
# e^{-c1 t^4 d}/2 <= Psi_d(t)/Phibar(t sqrt(d)) <= 2 e^{-c2 t^4 d}, t <= 0.1;
# the lower side already holds with c1 = 0 on the calibration grid
SANDWICH_C1 = 0.0
SANDWICH_C2 = 0.75
# sqrt(chi2/2) against the planted clique rate
PLANTED_CLIQUE_C = 20.0
# sqrt(chi2/2) against the planted Poisson rate
PLANTED_POISSON_C = 24.0
# the three coupling remainder events at s = 2: the 1 - n^-s quantile of the
# per-draw required constant at (n, d) = (16, 4096), rounded up without margin
REMAINDER_S = 2
REMAINDER_C = 2.2


def round_up(x: float, digits: int = 2) -> float:
    """Round ``x`` up to ``digits`` significant figures."""
    if x <= 0:
        return x
    scale = 10 ** (math.floor(math.log10(x)) - digits + 1)
    return round(math.ceil(x / scale) * scale, 12)


def round_down(x: float, digits: int = 2) -> float:
    if x <= 0:
        return x
    scale = 10 ** (math.floor(math.log10(x)) - digits + 1)
    return round(math.floor(x / scale) * scale, 12)


def _scale(p: float, d: int) -> float:
    return math.sqrt(math.log(1.0 / p) / d)


def required_threshold_c(p: float, d: int) -> float:
    """Smallest ``C`` satisfying both sides of the ``t_{p,d}`` bracket."""
    t = threshold_t(p, d)
    s = _scale(p, d)
    upper = t / s
    # the lower bracket min(1/2, C^{-1}(1/2 - p) s) constrains C only when t < 1/2
    lower = (0.5 - p) * s / t if t < 0.5 and p < 0.5 else 0.0
    return max(upper, lower)


def required_density_c1(p: float, d: int) -> float:
    t = threshold_t(p, d)
    return psi_density(d, t) / (p * max(math.sqrt(d), d * t))


def required_tail_c(p: float, d: int) -> float:
    """Smallest ``C`` with ``2 Psi_d(C sqrt(log(1/p)/d)) <= 2p``."""
    return threshold_t(p, d) / _scale(p, d)


def sandwich_log_ratio(t: float, d: int) -> float:
    """``log(Psi_d(t) / Phibar(t sqrt(d)))``."""
    return math.log(psi_tail(d, t)) - math.log(gaussian_tail(t * math.sqrt(d)))


def required_sandwich_c1(t: float, d: int) -> float:
    """Smallest ``c1`` with ``ratio >= e^{-c1 t^4 d}/2``; 0 when any ``c1`` works."""
    x = t**4 * d
    need = -(sandwich_log_ratio(t, d) + math.log(2.0))
    if need <= 0:
        return 0.0
    return need / x


def allowed_sandwich_c2(t: float, d: int) -> float:
    """Largest ``c2`` with ``ratio <= 2 e^{-c2 t^4 d}``; ``inf`` at ``t = 0``."""
    x = t**4 * d
    room = math.log(2.0) - sandwich_log_ratio(t, d)
    if room < 0:
        return -math.inf
    return math.inf if x == 0 else room / x


def planted_clique_rate(n: int, t: int, q: float) -> float:
    tail = max((q ** (-comb(k, 2) / 2) * n ** (-k / 2) for k in range(3, t + 1)), default=0.0)
    return q**-0.5 * n**-1.5 + 1 / (q * n * n) + tail


def required_planted_clique_c(n: int, t: int, q: float) -> float:
    return math.sqrt(chi2_planted_clique(n, t, q) / 2) / planted_clique_rate(n, t, q)


def planted_poisson_rate(n: int, t: int, lam: float) -> float:
    b = 1 + 1 / lam
    tail = max((n ** (-k / 2) * b ** (comb(k, 2) / 2) for k in range(3, t + 1)), default=0.0)
    return b / (n * n) + tail


def required_planted_poisson_c(n: int, t: int, lam: float) -> float:
    return math.sqrt(chi2_poim_planted(n, t, lam) / 2) / planted_poisson_rate(n, t, lam)


def required_remainder_c(n: int, d: int, a: list[float], t: list[float], gammas: list[float], a22: float) -> float:
    """Smallest ``C_s`` making all three remainder events hold for one coupling draw.

    ``a`` and ``t`` hold ``a_2j`` and ``T_j`` for ``j >= 3``; ``gammas`` holds
    ``Gamma_3..Gamma_n``.
    """
    ln = math.log(n)
    shift = abs(math.fsum(x * y for x, y in zip(a, t)))
    c_shift = shift * d / (math.sqrt(n) * ln**1.5)
    c_a22 = (1 - a22 * a22) * d / (n * ln)
    c_gamma = max(abs(g) for g in gammas) / math.sqrt(ln / d)
    return max(c_shift, c_a22, c_gamma)
