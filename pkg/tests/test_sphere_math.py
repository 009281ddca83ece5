import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate, stats

from conftest import within_se
from geomdetect.calibration import (
    PSI_DENSITY_C1,
    PSI_TAIL_C,
    PSI_THRESHOLD_C,
    SANDWICH_C1,
    SANDWICH_C2,
    sandwich_log_ratio,
)
from geomdetect.sphere_math import (
    SphereParams,
    gaussian_tail,
    psi_density,
    psi_plus_mean,
    psi_tail,
    sample_psi,
    sample_psi_plus,
    threshold_t,
)

# denser than the calibration grid, and offset from it
P_GRID = np.geomspace(1e-4, 0.5, 23)
D_GRID = np.unique(np.geomspace(10, 10**4, 13).astype(int))


def resolvable(p, d):
    """Whether a double ``t`` can hit ``Psi_d(t) = p`` to 1e-12: one ulp must move the tail less."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t = threshold_t(p, d)
    if abs(t) >= 1 - 1e-15:
        return False
    return psi_density(d, t) * 2 * math.ulp(t) <= 1e-13


def ks_passes(draws, d, alpha=0.01):
    return stats.kstest(draws, lambda x: 1.0 - psi_tail(d, x)).pvalue > alpha


class TestDensity:
    def test_params(self):
        assert SphereParams(2).d == 2
        with pytest.raises(ValueError):
            SphereParams(1)

    def test_uniform_at_three(self):
        assert psi_density(3, np.linspace(-1, 1, 11)) == pytest.approx(np.full(11, 0.5), abs=1e-15)

    @given(st.integers(2, 5000), st.floats(-0.999, 0.999))
    def test_symmetry(self, d, x):
        assert psi_density(d, x) == pytest.approx(psi_density(d, -x), rel=1e-14)

    @pytest.mark.parametrize("d", [2, 5, 50, 500])
    def test_integrates_to_one(self, d):
        if d == 2:
            # x = sin(theta) removes the integrable endpoint singularity
            val, _ = integrate.quad(lambda th: psi_density(2, math.sin(th)) * math.cos(th),
                                    -math.pi / 2, math.pi / 2, epsabs=1e-13)
        else:
            val, _ = integrate.quad(lambda x: psi_density(d, x), -1, 1, epsabs=1e-13, limit=200, points=[0.0])
        assert abs(val - 1.0) <= 1e-10

    def test_errors(self):
        with pytest.raises(ValueError):
            psi_density(5, 1.01)
        with pytest.raises(ValueError):
            psi_density(2, 1.0)
        assert psi_density(4, 1.0) == 0.0

    @pytest.mark.parametrize("d", [10, 100, 1000])
    def test_ratio_bound(self, d):
        for t in np.linspace(0, 0.5, 26):
            for delta in np.linspace(0, t, 11):
                lhs = psi_density(d, t - delta) / psi_density(d, t)
                assert lhs <= math.exp(2 * t * d * delta) * (1 + 1e-12)

    def test_density_bound_frozen_constant(self):
        for d in D_GRID:
            for p in P_GRID:
                t = threshold_t(p, d)
                assert psi_density(d, t) <= PSI_DENSITY_C1 * p * max(math.sqrt(d), d * t)


class TestTail:
    @given(st.integers(2, 3000))
    def test_half_at_zero(self, d):
        assert psi_tail(d, 0.0) == pytest.approx(0.5, abs=1e-15)

    @given(st.floats(-1, 1))
    def test_uniform_tail(self, x):
        assert psi_tail(3, x) == pytest.approx((1 - x) / 2, abs=1e-14)

    @given(st.integers(2, 3000), st.floats(-1, 1))
    def test_reflection(self, d, x):
        assert psi_tail(d, x) + psi_tail(d, -x) == pytest.approx(1.0, abs=1e-14)

    def test_endpoints_and_monotone(self):
        assert psi_tail(2, 1.0) == 0.0 and psi_tail(2, -1.0) == 1.0
        vals = psi_tail(20, np.linspace(-0.99, 0.99, 200))
        assert (np.diff(vals) < 0).all()

    @pytest.mark.parametrize("d", [2, 7, 60])
    def test_matches_quadrature(self, d):
        for x in (-0.7, 0.1, 0.45, 0.9):
            if d == 2:
                # psi_2 (1 - u)^{1/2} = (1 + u)^{-1/2} / pi is smooth away from -1
                val, _ = integrate.quad(lambda u: 1 / (math.pi * math.sqrt(1 + u)), x, 1,
                                        weight="alg", wvar=(0, -0.5), epsabs=1e-13)
            else:
                val, _ = integrate.quad(lambda u: psi_density(d, u), x, 1, epsabs=1e-13, limit=200)
            assert psi_tail(d, x) == pytest.approx(val, abs=1e-11)

    def test_tail_bound_frozen_constant(self):
        for d in D_GRID:
            for p in P_GRID:
                x = PSI_TAIL_C * math.sqrt(math.log(1 / p) / d)
                assert 2 * psi_tail(d, min(x, 1.0)) <= 2 * p


class TestThreshold:
    def test_examples(self):
        assert threshold_t(0.5, 17) == 0.0
        for p in (0.01, 0.3, 0.77):
            assert threshold_t(p, 3) == pytest.approx(1 - 2 * p, abs=1e-12)
        t = threshold_t(0.1, 100)
        assert abs(psi_tail(100, t) - 0.1) <= 1e-12

    def test_errors(self):
        for p in (0.0, 1.0):
            with pytest.raises(ValueError):
                threshold_t(p, 10)

    @given(st.floats(1e-8, 1 - 1e-8), st.integers(2, 10**5))
    def test_round_trip(self, p, d):
        t = threshold_t(p, d) if resolvable(p, d) else None
        assume(t is not None)
        assert abs(psi_tail(d, t) - p) <= 1e-12

    def test_round_trip_grid(self):
        for d in (2, 3, 5, 10, 50, 100, 1000, 10**4):
            for p in (1e-4, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99):
                assert abs(psi_tail(d, threshold_t(p, d)) - p) <= 1e-12

    def test_unresolvable_root_warns(self):
        # Psi_2(t) = 1e-8 forces t within one ulp of 1
        with pytest.warns(RuntimeWarning):
            threshold_t(1e-8, 2)

    def test_bracket_frozen_constant(self):
        for d in D_GRID:
            for p in P_GRID:
                t = threshold_t(p, d)
                s = math.sqrt(math.log(1 / p) / d)
                assert t <= PSI_THRESHOLD_C * s
                assert t >= min(0.5, (0.5 - p) * s / PSI_THRESHOLD_C)


class TestGaussianTail:
    def test_examples(self):
        assert gaussian_tail(0.0) == 0.5
        xs = np.linspace(-8, 8, 33)
        assert gaussian_tail(xs) + gaussian_tail(-xs) == pytest.approx(np.ones(33), abs=1e-15)

    @pytest.mark.parametrize("x", [0.5, 2.0, 5.0, 8.0])
    def test_quadrature_oracle(self, x):
        val, _ = integrate.quad(lambda u: math.exp(-u * u / 2) / math.sqrt(2 * math.pi), x, np.inf,
                                epsabs=0, epsrel=1e-13)
        assert gaussian_tail(x) == pytest.approx(val, rel=1e-12)

    def test_sandwich_frozen_constants(self):
        for d in (3, 15, 40, 200, 700, 2500, 10**4):
            for t in np.linspace(0, 0.1, 17):
                x = t**4 * d
                log_ratio = sandwich_log_ratio(t, d)
                assert log_ratio >= -SANDWICH_C1 * x - math.log(2)
                assert log_ratio <= math.log(2) - SANDWICH_C2 * x


class TestSampling:
    def test_moments(self, rng):
        d = 12
        x = sample_psi(d, rng, 10**5)
        assert within_se(x, 0.0)[0]
        assert within_se(x * x, 1 / d)[0]

    @pytest.mark.parametrize("d", [5, 64])
    def test_ks(self, rng, d):
        assert ks_passes(sample_psi(d, rng, 5000), d)

    def test_scalar_draw(self, rng):
        assert isinstance(sample_psi(4, rng), float)
        assert isinstance(sample_psi_plus(4, 0.3, rng), float)

    @pytest.mark.parametrize("p", [0.5, 0.1, 1e-4])
    def test_plus_support_and_mean(self, rng, p):
        d = 30
        x = sample_psi_plus(d, p, rng, 4000 if p >= 1e-3 else 1500)
        t = threshold_t(p, d)
        assert (x >= t).all()
        num, _ = integrate.quad(lambda u: u * psi_density(d, u), t, 1, epsabs=1e-14)
        assert psi_plus_mean(d, p) == pytest.approx(num / p, rel=1e-8)
        assert within_se(x, num / p)[0]

    def test_plus_inverse_cdf_law(self, rng):
        d, p = 20, 5e-4
        t = threshold_t(p, d)
        x = sample_psi_plus(d, p, rng, 2000)
        res = stats.kstest(x, lambda v: 1.0 - psi_tail(d, np.maximum(v, t)) / p)
        assert res.pvalue > 0.01
