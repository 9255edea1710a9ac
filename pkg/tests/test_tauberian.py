"""Reciprocal limit constants on the MGF and tail sides."""

import math

import numpy as np
import pytest

from tailbounds import oracles
from tailbounds.errors import InputError
from tailbounds.functions import PhiFunction
from tailbounds.tauberian import tauberian_check

QREF = PhiFunction.quadratic(lo=0.0)


class TestAnalytic:
    def test_standard_gaussian_is_unit(self):
        rep = tauberian_check(QREF, oracles.gaussian())
        # the MGF-side ratio is identically 1 for the matching exponent
        assert all(abs(k - 1.0) < 1e-9 for k in rep.k_mgf_ladder)
        assert rep.k_mgf == pytest.approx(1.0, abs=1e-9)
        assert rep.k_tail == pytest.approx(1.0, abs=0.02)
        assert rep.converged

    def test_doubled_scale(self):
        rep = tauberian_check(QREF, oracles.gaussian(2.0))
        assert rep.k_mgf == pytest.approx(2.0, abs=1e-9)
        assert rep.k_tail == pytest.approx(0.5, rel=0.02)

    @pytest.mark.parametrize("scale", [0.5, 1.0, 2.0])
    def test_reciprocity_within_two_percent(self, scale):
        rep = tauberian_check(QREF, oracles.gaussian(scale))
        assert rep.consistency <= 0.02

    def test_scale_equivariance(self):
        base = tauberian_check(QREF, oracles.gaussian())
        for a in (0.5, 2.0):
            rep = tauberian_check(QREF, oracles.gaussian(a))
            assert rep.k_mgf == pytest.approx(a * base.k_mgf, rel=1e-9)
            assert rep.k_tail == pytest.approx(base.k_tail / a, rel=0.02)

    def test_tail_ladder_monotone_toward_limit(self):
        rep = tauberian_check(QREF, oracles.gaussian())
        ladder = np.array(rep.k_tail_ladder)
        assert np.all(np.diff(ladder) < 0)  # corrections shrink with x
        assert ladder[-1] > rep.k_tail       # extrapolation moves past the cap

    def test_pareto_has_no_mgf(self):
        with pytest.raises(InputError):
            tauberian_check(QREF, oracles.pareto(3.0))

    def test_flat_reference_fails_regularity_gate(self):
        from tailbounds.errors import NotCertifiedError
        ref = PhiFunction.from_callable(lambda l: 5.0, 0.0, math.inf,
                                        convex=True, label="flat", slope_lim=0.0)
        with pytest.raises(NotCertifiedError):
            tauberian_check(ref, oracles.gaussian())

    def test_non_monotone_reference_not_invertible(self):
        from tailbounds.errors import NonInvertibleError
        ref = PhiFunction.from_callable(lambda l: 5.0, 0.0, math.inf,
                                        convex=True, label="flat", slope_lim=0.0)
        with pytest.raises(NonInvertibleError):
            tauberian_check(ref, oracles.gaussian(), check_regularity=False)


class TestMonteCarlo:
    def test_seeded_tail_constant(self):
        rep = tauberian_check(QREF, oracles.gaussian(),
                              x_ladder=[2.0, 3.0, 4.0, 5.0],
                              monte_carlo=True, n_samples=10_000_000, seed=42)
        assert rep.mode == "monte-carlo"
        assert rep.details["counts"][-1] > 0
        assert abs(rep.k_tail - 1.0) <= 0.10
        # identical seed, identical report
        rep2 = tauberian_check(QREF, oracles.gaussian(),
                               x_ladder=[2.0, 3.0, 4.0, 5.0],
                               monte_carlo=True, n_samples=10_000_000, seed=42)
        assert rep2.k_tail == rep.k_tail
        assert rep2.details["counts"] == rep.details["counts"]
