"""Auxiliary integrals, compound upper bounds, Cramer certification."""

import math

import numpy as np
import pytest

from tailbounds.errors import DivergentIntegral, InputError
from tailbounds.functions import PhiFunction
from tailbounds.integrals import (
    compound_upper_bound,
    cramer_check,
    epsilon_report,
    finite_measure_upper_bound,
    i_integral,
    k_integral,
    log_compound_upper_bound,
    log_i_integral,
    optimized_upper_bound,
    r_integral,
)

LINEAR = PhiFunction.linear(1.0, lo=0.0)
HALF_SQUARE = PhiFunction.from_callable(
    lambda x: 0.5 * x * x, 0.0, math.inf,
    deriv=lambda x: x, convex=True, label="x^2/2", slope_lim=math.inf)
SQUARE = PhiFunction.from_callable(
    lambda x: x * x, 0.0, math.inf,
    deriv=lambda x: 2 * x, convex=True, label="x^2", slope_lim=math.inf)
POWER_3_2 = PhiFunction.from_callable(
    lambda x: x ** 1.5, 0.0, math.inf,
    deriv=lambda x: 1.5 * x ** 0.5, convex=True, label="x^1.5", slope_lim=math.inf)
LOG_TAIL = PhiFunction.from_callable(
    lambda x: 2.0 * math.log1p(x), 0.0, math.inf, label="2ln(1+x)")


class TestKIntegral:
    def test_linear_closed_form(self):
        assert k_integral(LINEAR, 0.5) == pytest.approx(2.0, rel=1e-9)

    def test_gaussian_closed_form(self):
        assert k_integral(SQUARE, 1.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-9)

    def test_log_growth_divergent(self):
        with pytest.raises(DivergentIntegral):
            k_integral(LOG_TAIL, 0.4)

    def test_eps_domain(self):
        with pytest.raises(InputError):
            k_integral(LINEAR, 0.0)

    def test_bounded_domain_rejected(self):
        with pytest.raises(InputError):
            k_integral(PhiFunction.linear(1.0, lo=0.0, hi=1.0), 0.5)


class TestRIntegral:
    def test_linear(self):
        assert r_integral(LINEAR, 0.5) == pytest.approx(2.0, rel=1e-9)

    def test_square(self):
        # exponent (1-eps)^2 x^2 - x^2 = -0.75 x^2 at eps = 0.5
        assert r_integral(SQUARE, 0.5) == pytest.approx(
            math.sqrt(math.pi / 0.75) / 2, rel=1e-9)

    def test_linear_small_eps(self):
        assert r_integral(LINEAR, 0.1) == pytest.approx(10.0, rel=1e-9)

    def test_power_tail_divergent(self):
        # exponent difference tends to a constant: integrand does not decay
        pareto_like = PhiFunction.from_callable(
            lambda x: 3.0 * math.log1p(x), 0.0, math.inf, label="3ln(1+x)")
        with pytest.raises(DivergentIntegral):
            r_integral(pareto_like, 0.3)


class TestEpsilonReport:
    def test_min_of_finite(self):
        rep = epsilon_report(HALF_SQUARE, 0.2)
        assert rep.k == pytest.approx(0.5 * math.sqrt(math.pi / 0.1), rel=1e-8)
        assert rep.r == pytest.approx(0.5 * math.sqrt(math.pi / 0.18), rel=1e-8)
        assert rep.m == min(rep.k, rep.r)

    def test_single_finite_entry(self):
        pareto_like = PhiFunction.from_callable(
            lambda x: 3.0 * math.log1p(x), 0.0, math.inf, label="3ln(1+x)")
        rep = epsilon_report(pareto_like, 0.5)
        assert rep.k is not None and rep.r is None
        assert rep.m == rep.k

    def test_both_divergent(self):
        rep = epsilon_report(LOG_TAIL, 0.3)
        assert rep.m is None

    def test_monotone_in_eps(self):
        eps_grid = [0.05, 0.1, 0.2, 0.35, 0.5]
        ks = [k_integral(HALF_SQUARE, e) for e in eps_grid]
        rs = [r_integral(HALF_SQUARE, e) for e in eps_grid]
        assert all(a >= b - 1e-9 for a, b in zip(ks, ks[1:]))
        assert all(a >= b - 1e-9 for a, b in zip(rs, rs[1:]))


I3_CLOSED = math.exp(4.5) * math.sqrt(2 * math.pi) * (1 - 0.5 * math.erfc(3 / math.sqrt(2)))


class TestCompoundBound:
    def test_direct_integral_spot(self):
        assert i_integral(HALF_SQUARE, 3.0) == pytest.approx(I3_CLOSED, rel=1e-6)

    def test_gaussian_spot_bound(self):
        k = 0.5 * math.sqrt(math.pi / 0.1)
        r = 0.5 * math.sqrt(math.pi / 0.18)
        expected = min(k, r) * math.exp(3.75 ** 2 / 2)
        bound = compound_upper_bound(HALF_SQUARE, 3.0, 0.2)
        assert bound == pytest.approx(expected, rel=1e-7)
        assert bound >= I3_CLOSED

    def test_sharp_variant_tighter_here(self):
        k = 0.5 * math.sqrt(math.pi / 0.1)
        expected = k * math.exp(0.8 * 3.75 ** 2 / 2)
        sharp = compound_upper_bound(HALF_SQUARE, 3.0, 0.2, "sharp")
        assert sharp == pytest.approx(expected, rel=1e-7)
        assert I3_CLOSED <= sharp <= compound_upper_bound(HALF_SQUARE, 3.0, 0.2, "plain")

    def test_finite_measure_shortcut(self):
        zeta = PhiFunction.linear(1.0, lo=0.0, hi=1.0)
        assert finite_measure_upper_bound(zeta, 3.0) == pytest.approx(
            math.exp(2.0), rel=1e-8)

    def test_optimized_at_most_fixed_eps(self):
        best, eps_star = optimized_upper_bound(HALF_SQUARE, 3.0)
        assert best <= compound_upper_bound(HALF_SQUARE, 3.0, 0.2) * (1 + 1e-9)
        assert 0.01 <= eps_star <= 0.99
        assert best >= I3_CLOSED * (1 - 1e-9)

    @pytest.mark.parametrize("zeta", [LINEAR, HALF_SQUARE, POWER_3_2],
                             ids=["x", "x^2/2", "x^1.5"])
    @pytest.mark.parametrize("lam", [1.0, 3.0, 10.0, 30.0])
    @pytest.mark.parametrize("eps", [0.05, 0.2, 0.5])
    def test_dominance_matrix(self, zeta, lam, eps):
        """The compound bound never undercuts the direct integral."""
        log_bound = log_compound_upper_bound(zeta, lam, eps)
        if math.isinf(log_bound):
            # vacuous bound; the integral must genuinely diverge too
            with pytest.raises(DivergentIntegral):
                log_i_integral(zeta, lam)
            return
        log_truth = log_i_integral(zeta, lam)
        assert log_bound - log_truth >= math.log1p(-1e-9)

    def test_variant_orderings(self):
        # fixed eps: sharp <= plain, min-variant <= plain
        for lam in (3.0, 10.0):
            plain = log_compound_upper_bound(HALF_SQUARE, lam, 0.2, "plain")
            sharp = log_compound_upper_bound(HALF_SQUARE, lam, 0.2, "sharp")
            minv = log_compound_upper_bound(HALF_SQUARE, lam, 0.2, "min")
            assert sharp <= plain + 1e-12
            assert minv <= plain + 1e-12
            assert sharp >= log_i_integral(HALF_SQUARE, lam) - 1e-9


class TestCramer:
    def test_linear_certified_with_witness(self):
        cert = cramer_check(LINEAR)
        assert cert.certified
        assert cert.mu == pytest.approx(1.0, rel=1e-9)

    def test_superlinear_certified(self):
        cert = cramer_check(SQUARE)
        assert cert.certified
        assert all(v is not None for v in cert.k_table.values())

    def test_power_tail_not_certified(self):
        g = PhiFunction.from_callable(
            lambda x: 3.0 * math.log1p(x), 0.0, math.inf, label="3ln(1+x)")
        cert = cramer_check(g, eps_grid=(0.05, 0.1, 0.3, 0.5))
        assert not cert.certified
        assert cert.mu is None
        # damped integral diverges below the critical damping, not above
        assert cert.k_table[0.05] is None
        assert cert.k_table[0.3] is None
        assert cert.k_table[0.5] is not None

    def test_sublinear_growth_not_certified_but_integrable(self):
        g = PhiFunction.from_callable(
            lambda x: x ** 0.5, 0.0, math.inf, label="sqrt")
        cert = cramer_check(g, eps_grid=(0.05, 0.2, 0.5))
        assert not cert.certified
        assert all(v is not None for v in cert.k_table.values())
