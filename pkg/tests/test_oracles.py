"""Reference laws, quadrature, and the seeded sampling machinery."""

import math

import numpy as np
import pytest

from tailbounds import oracles
from tailbounds.errors import NotConvergedError
from tailbounds.functions import conjugate


class TestQuadrature:
    def test_unit_exponential(self):
        val, err = oracles.quadrature(lambda x: math.exp(-x), 0.0, math.inf)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_half_gaussian(self):
        val, _ = oracles.quadrature(lambda x: math.exp(-x * x), 0.0, math.inf)
        assert val == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-10)

    def test_tilted_gaussian_spot(self):
        val, _ = oracles.quadrature(lambda x: math.exp(3 * x - x * x / 2), 0.0, math.inf)
        closed = math.exp(4.5) * math.sqrt(2 * math.pi) * (
            1.0 - 0.5 * math.erfc(3.0 / math.sqrt(2.0)))
        assert val == pytest.approx(closed, rel=1e-9)

    def test_finite_range(self):
        val, _ = oracles.quadrature(lambda x: x * x, 0.0, 2.0)
        assert val == pytest.approx(8.0 / 3.0, rel=1e-10)

    def test_nonintegrable_flags(self):
        with pytest.raises(NotConvergedError):
            oracles.quadrature(lambda x: 1.0 / (1.0 + x), 0.0, math.inf)


class TestLogIntegralExp:
    def test_matches_plain_quadrature(self):
        lv = oracles.log_integral_exp(lambda x: 3 * x - x * x / 2, 0.0, math.inf, peak=3.0)
        closed = math.exp(4.5) * math.sqrt(2 * math.pi) * (
            1.0 - 0.5 * math.erfc(3.0 / math.sqrt(2.0)))
        assert lv == pytest.approx(math.log(closed), abs=1e-9)

    def test_huge_exponent_no_overflow(self):
        # peak value around e^{5000}: only representable in log space
        lv = oracles.log_integral_exp(lambda x: 200 * x - x * x / 2, 0.0, math.inf, peak=200.0)
        assert lv == pytest.approx(200 ** 2 / 2 + 0.5 * math.log(2 * math.pi), rel=1e-6)


class TestEmpiricalTail:
    def test_constant_sample_above(self):
        res = oracles.empirical_tail(np.full(10, 5.0), [4.0])
        assert res["fraction"][0] == 1.0

    def test_constant_sample_below(self):
        res = oracles.empirical_tail(np.full(10, 5.0), [6.0])
        assert res["fraction"][0] == 0.0

    def test_gaussian_million_within_wilson(self):
        g = oracles.gaussian()
        samples = g.sample(seed=7, n=1_000_000)
        res = oracles.empirical_tail(samples, [2.0])
        q2 = 0.5 * math.erfc(2.0 / math.sqrt(2.0))
        assert abs(res["fraction"][0] - q2) <= 3.0 * res["wilson_halfwidth"][0]


class TestSuiteExactness:
    @pytest.mark.parametrize("name", ["gaussian", "exponential", "weibull2",
                                      "weibull4", "pareto3"])
    def test_tail_matches_density_quadrature(self, name):
        dist = oracles.suite()[name]
        for x in (1.0, 2.0, 4.0):
            val, _ = oracles.quadrature(dist.density, x, math.inf)
            assert val == pytest.approx(dist.tail(x), abs=1e-9)

    @pytest.mark.parametrize("name,lams", [
        ("gaussian", (0.5, 1.5)),
        ("exponential", (0.3, 0.7)),
        ("weibull2", (0.5, 1.5)),
        ("weibull4", (0.5, 2.0)),
    ])
    def test_mgf_consistency(self, name, lams):
        dist = oracles.suite()[name]
        phi = dist.mgf_exponent
        for lam in lams:
            if dist.support_lo >= 0:
                val, _ = oracles.quadrature(
                    lambda x: math.exp(lam * x) * dist.density(x), 0.0, math.inf)
            else:
                val, _ = oracles.quadrature(
                    lambda x: math.exp(lam * x) * dist.density(x)
                    + math.exp(-lam * x) * dist.density(-x), 0.0, math.inf)
            assert val == pytest.approx(math.exp(phi.value(lam)), rel=1e-7)

    @pytest.mark.parametrize("name", ["gaussian", "exponential", "weibull2",
                                      "weibull4"])
    def test_chernoff_ground_truth(self, name):
        dist = oracles.suite()[name]
        xs = np.linspace(1.0, 8.0, 15)
        res = conjugate(dist.mgf_exponent, xs)
        bound = np.exp(-np.minimum(res.values, 700.0))
        tails = dist.exact_tail(xs)
        assert np.all(bound >= tails - 1e-12)

    def test_weibull_m2_closed_form_cross_check(self):
        phi = oracles.weibull(2.0).mgf_exponent
        for lam in (0.5, 3.0, 10.0, 30.0):
            assert phi.value(lam) == pytest.approx(
                oracles.weibull_log_mgf_closed_m2(lam), rel=1e-10)

    def test_mixture_pinched_between_components(self):
        mix = oracles.gaussian_scale_mixture(0.3, 0.8, 1.0)
        for lam in (0.5, 2.0, 5.0):
            lo = 0.5 * (0.8 * lam) ** 2
            hi = 0.5 * lam ** 2
            assert lo - 1e-12 <= mix.mgf_exponent.value(lam) <= hi + 1e-12

    def test_exponential_tail_fn_values(self):
        g = oracles.gaussian().exponential_tail_fn()
        assert g.value(40.0) == pytest.approx(804.608, rel=1e-4)
        e = oracles.exponential_unit().exponential_tail_fn()
        assert e.value(5.0) == pytest.approx(5.0, rel=1e-12)


class TestSampling:
    def test_same_seed_identical_stream(self):
        g = oracles.gaussian()
        a = g.sample(123, 4096)
        b = g.sample(123, 4096)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        g = oracles.gaussian()
        assert not np.array_equal(g.sample(1, 1024), g.sample(2, 1024))

    def test_uniforms_open_interval(self):
        u = oracles.uniform_stream(99, 100_000)
        assert u.min() > 0.0 and u.max() < 1.0

    @pytest.mark.parametrize("name", ["exponential", "weibull2", "pareto3"])
    def test_sampler_matches_tail(self, name):
        dist = oracles.suite()[name]
        s = dist.sample(2026, 400_000)
        for x in (1.5, 3.0):
            frac = float((s >= x).mean())
            assert frac == pytest.approx(dist.tail(x), abs=4e-3 if frac > 1e-3 else 1e-3)
