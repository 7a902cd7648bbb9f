"""Fisher information values, limits and Cramer-Rao bounds."""

import math

import numpy as np
import pytest

from modesep import (
    DI_SMALL_SEPARATION_COEFF,
    CrosstalkMatrix,
    crlb,
    fi_direct,
    fi_hg_full,
    fi_two_mode_approx,
    fi_two_mode_exact,
    perturbed_probs,
    superres_param,
    superres_param_analytic,
)

XT_PAPERLIKE = CrosstalkMatrix(alpha=0.9966, beta=1.0)

# frozen from the closed form, cross-checked below against the
# finite-difference information of the outcome probabilities
FI_EXACT_005 = 0.010943416470540


def finite_difference_fi(epsilon, xt, h=1e-4):
    """Two-outcome Fisher information from numerically differenced probs.

    Fourth-order stencil: a plain central difference at small separations
    loses digits to cancellation before it meets the 1e-8 target.
    """
    p1 = lambda e: perturbed_probs(e, xt).p1
    dp1 = (
        -p1(epsilon + 2 * h) + 8 * p1(epsilon + h) - 8 * p1(epsilon - h) + p1(epsilon - 2 * h)
    ) / (12.0 * h)
    p = perturbed_probs(epsilon, xt)
    return dp1**2 * (1.0 / p.p0 + 1.0 / p.p1)


class TestHgFullInformation:
    @pytest.mark.parametrize("epsilon", [0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 4.0])
    def test_constant_quarter(self, epsilon):
        assert fi_hg_full(epsilon).value == pytest.approx(0.25, abs=1e-9)

    def test_method_tag(self):
        assert fi_hg_full(1.0).method_tag == "hg_full"


class TestDirectIntensityInformation:
    def test_vanishes_at_zero(self):
        assert fi_direct(0.0).value == 0.0

    def test_small_separation_coefficient(self):
        assert fi_direct(1e-2).value / 1e-4 == pytest.approx(0.125, abs=1e-3)

    def test_coefficient_regenerates(self):
        """The 1/8 law is derived, so the named constant must regenerate."""
        for eps in (1e-2, 5e-3):
            ratio = fi_direct(eps).value / eps**2
            assert ratio == pytest.approx(DI_SMALL_SEPARATION_COEFF, abs=1e-3)

    @pytest.mark.parametrize("epsilon", [0.1, 0.5, 1.0, 2.0, 4.0])
    def test_below_quantum_limit(self, epsilon):
        assert fi_direct(epsilon).value < 0.25

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            fi_direct(-0.1)


class TestTwoModeExact:
    def test_ideal_device_form(self):
        for eps in (1e-3, 0.2, 1.0, 3.0):
            u = (eps / 4.0) ** 2
            assert fi_two_mode_exact(eps, CrosstalkMatrix()).value == pytest.approx(
                1.0 / (4.0 * (1.0 + u) ** 2), rel=1e-12
            )
        assert fi_two_mode_exact(0.0, CrosstalkMatrix()).value == pytest.approx(0.25)

    def test_vanishes_at_zero_with_leakage(self):
        for alpha in (0.5, 0.9, 0.9966):
            assert fi_two_mode_exact(0.0, CrosstalkMatrix(alpha, 1.0)).value == 0.0

    def test_calibrated_point(self):
        value = fi_two_mode_exact(0.05, XT_PAPERLIKE).value
        assert value == pytest.approx(FI_EXACT_005, rel=1e-10)
        assert value == pytest.approx(0.0109, abs=1e-4)

    @pytest.mark.parametrize("epsilon", [0.05, 0.2, 1.0])
    def test_matches_finite_difference(self, epsilon):
        exact = fi_two_mode_exact(epsilon, XT_PAPERLIKE).value
        assert exact == pytest.approx(finite_difference_fi(epsilon, XT_PAPERLIKE), rel=1e-8)

    def test_degenerate_device_rejected(self):
        with pytest.raises(ValueError):
            fi_two_mode_exact(0.5, CrosstalkMatrix(0.5, 0.5))

    def test_never_exceeds_quantum_limit(self):
        rng = np.random.default_rng(77)
        for _ in range(300):
            alpha = rng.uniform(0.2, 1.0)
            beta = rng.uniform(max(0.0, 1.0 - alpha) + 1e-6, 1.0)
            xt = CrosstalkMatrix(alpha, beta)
            eps = rng.uniform(0.0, 4.0)
            assert fi_two_mode_exact(eps, xt).value <= 0.25 + 1e-12


class TestTwoModeApprox:
    def test_leak_free_is_quarter(self):
        for eps in (0.01, 0.5, 2.0):
            assert fi_two_mode_approx(eps, 1.0).value == pytest.approx(0.25, rel=1e-15)

    def test_vanishes_at_zero_with_leak(self):
        assert fi_two_mode_approx(0.0, 0.99).value == 0.0

    def test_close_to_exact_at_small_leak(self):
        approx = fi_two_mode_approx(0.1, 0.9966).value
        exact = fi_two_mode_exact(0.1, XT_PAPERLIKE).value
        assert abs(approx - exact) / exact < 0.05

    def test_ratio_tends_to_one(self):
        def ratio(alpha):
            return (
                fi_two_mode_approx(0.1, alpha).value
                / fi_two_mode_exact(0.1, CrosstalkMatrix(alpha, 1.0)).value
            )

        r_far, r_near = ratio(0.999), ratio(0.9999)
        assert abs(r_far - 1.0) < 5e-3
        assert abs(r_near - 1.0) < abs(r_far - 1.0)


class TestSuperresParam:
    def test_calibrated_value_near_thirtyseven(self):
        s = superres_param(XT_PAPERLIKE)
        assert 35.0 <= s <= 39.0
        assert s == pytest.approx(superres_param_analytic(XT_PAPERLIKE), rel=1e-3)

    def test_analytic_example(self):
        s = superres_param_analytic(CrosstalkMatrix(0.99, 1.0))
        assert s == pytest.approx(0.99**2 / (8.0 * 0.99 * 0.01), rel=1e-12)
        assert superres_param(CrosstalkMatrix(0.99, 1.0)) == pytest.approx(s, rel=1e-3)

    def test_degenerate_device_rejected(self):
        with pytest.raises(ValueError):
            superres_param(CrosstalkMatrix(0.5, 0.5))

    def test_leak_free_diverges(self):
        assert superres_param(CrosstalkMatrix(1.0, 1.0)) == math.inf

    def test_monotone_in_alpha(self):
        values = [
            superres_param(CrosstalkMatrix(a, 1.0))
            for a in (0.99, 0.995, 0.999, 0.9995)
        ]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestCrlb:
    def test_quantum_limited_bound(self):
        bound = crlb(0.5, 1e4, fi_hg_full(0.5))
        assert bound.crlb_unbiased == pytest.approx(4e-4, rel=1e-8)
        assert math.sqrt(bound.crlb_unbiased) == pytest.approx(0.02, rel=1e-8)

    def test_zero_bias_profile_reduces_to_unbiased(self):
        fi = fi_two_mode_exact(0.3, XT_PAPERLIKE)
        plain = crlb(0.3, 1e4, fi)
        biased = crlb(0.3, 1e4, fi, bias_profile=(0.0, 0.0))
        assert biased.crlb_biased == plain.crlb_unbiased

    def test_calibrated_point_bound(self):
        bound = crlb(0.05, 1e5, fi_two_mode_exact(0.05, XT_PAPERLIKE))
        assert bound.crlb_unbiased == pytest.approx(1.0 / (1e5 * FI_EXACT_005), rel=1e-10)
        assert bound.crlb_unbiased == pytest.approx(9.2e-4, abs=2e-5)

    def test_bias_profile_enters_bound(self):
        fi = fi_two_mode_exact(0.3, XT_PAPERLIKE)
        bound = crlb(0.3, 1e4, fi, bias_profile=(0.01, -0.2))
        expected = 0.8**2 / (1e4 * fi.value) + 1e-4
        assert bound.crlb_biased == pytest.approx(expected, rel=1e-12)
        assert bound.crlb_biased >= bound.bias**2

    def test_zero_information_flags_infinite(self):
        bound = crlb(0.0, 1e4, fi_two_mode_exact(0.0, XT_PAPERLIKE))
        assert math.isinf(bound.crlb_unbiased)
        assert math.isinf(bound.crlb_biased)

    def test_rejects_nonpositive_photons(self):
        with pytest.raises(ValueError):
            crlb(0.1, 0, fi_hg_full(0.1))
