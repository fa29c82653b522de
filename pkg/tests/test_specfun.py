import math

import mpmath
import numpy as np
import pytest

from afrelay import specfun


class TestBesselK:
    def test_frozen_values(self):
        # frozen from the integral representation K_v(x) = int_0^inf e^{-x cosh t} cosh(vt) dt
        np.testing.assert_allclose(specfun.bessel_k_int(0, 1.0), 0.42102443824070834, rtol=1e-14)
        np.testing.assert_allclose(specfun.bessel_k_int(1, 1.0), 0.6019072301972346, rtol=1e-14)

    def test_frozen_values_match_integral_oracle(self):
        for v, frozen in ((0, 0.42102443824070834), (1, 0.6019072301972346)):
            oracle = mpmath.quad(lambda t: mpmath.exp(-mpmath.cosh(t)) * mpmath.cosh(v * t), [0, 1, 2, 4, 10])
            # the integrand is below e^{-11000} past t = 10
            assert abs(float(oracle) - frozen) < 1e-15

    def test_recurrence_at_one(self):
        k2 = specfun.bessel_k_int(2, 1.0)
        np.testing.assert_allclose(k2, specfun.bessel_k_int(0, 1.0) + 2.0 * specfun.bessel_k_int(1, 1.0), rtol=1e-13)

    @pytest.mark.parametrize("v", [0, 1, 2, 3, 5, 8, 13, 20])
    def test_against_mpmath(self, v):
        xs = np.geomspace(1e-8, 700, 60)
        got = specfun.bessel_k_int(v, xs)
        ref = np.array([float(mpmath.besselk(v, x)) for x in xs])
        finite = np.isfinite(got) & (ref > 1e-300) & (ref < 1e300)
        np.testing.assert_allclose(got[finite], ref[finite], rtol=1e-12)

    @pytest.mark.parametrize("v", [0, 1, 4, 30, 64])
    def test_log_variant_against_mpmath(self, v):
        xs = np.geomspace(1e-10, 2000, 40)
        got = specfun.log_bessel_k_int(v, xs)
        ref = np.array([float(mpmath.log(mpmath.besselk(v, x))) for x in xs])
        np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)

    def test_negative_order_folds(self):
        assert specfun.bessel_k_int(-3, 2.0) == specfun.bessel_k_int(3, 2.0)

    def test_underflow_returns_zero(self):
        assert specfun.bessel_k_int(0, 800.0) == 0.0

    def test_scalar_in_scalar_out(self):
        assert isinstance(specfun.bessel_k_int(1, 0.5), float)
        assert specfun.bessel_k_int(1, np.array([0.5, 1.0])).shape == (2,)

    @pytest.mark.parametrize("x", [0.0, -1.0, math.inf, math.nan])
    def test_domain(self, x):
        with pytest.raises(ValueError):
            specfun.bessel_k_int(0, x)
        with pytest.raises(ValueError):
            specfun.log_bessel_k_int(0, x)

    def test_recurrence_invariant(self):
        xs = np.linspace(0.01, 50, 200)
        for v in range(1, 12):
            lhs = specfun.bessel_k_int(v + 1, xs) - specfun.bessel_k_int(v - 1, xs)
            rhs = 2 * v / xs * specfun.bessel_k_int(v, xs)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-10)

    def test_strictly_decreasing(self):
        xs = np.linspace(0.05, 60, 400)
        for v in (0, 1, 3, 7):
            assert np.all(np.diff(specfun.bessel_k_int(v, xs)) < 0)


class TestDigamma:
    def test_psi_one(self):
        np.testing.assert_allclose(specfun.digamma_int(1), -0.5772156649015329, atol=1e-15)
        assert abs(specfun.digamma_int(1) - float(-mpmath.euler)) < 1e-15

    def test_recurrence(self):
        for n in range(1, 40):
            np.testing.assert_allclose(specfun.digamma_int(n + 1), specfun.digamma_int(n) + 1.0 / n, atol=1e-14)

    def test_harmonic(self):
        expected = specfun.digamma_int(1) + 1 + 1 / 2 + 1 / 3 + 1 / 4
        np.testing.assert_allclose(specfun.digamma_int(5), expected, atol=1e-14)

    def test_against_mpmath(self):
        for n in (1, 2, 7, 50, 1000):
            assert abs(specfun.digamma_int(n) - float(mpmath.digamma(n))) < 1e-14

    @pytest.mark.parametrize("n", [0, -2, 1.5])
    def test_domain(self, n):
        with pytest.raises(ValueError):
            specfun.digamma_int(n)


class TestIncompleteGamma:
    @pytest.mark.parametrize("x", [0.5, 2.0])
    def test_lower_n1(self, x):
        np.testing.assert_allclose(specfun.inc_gamma_lower(1, x), 1 - math.exp(-x), rtol=1e-14)

    def test_lower_at_zero(self):
        for n in (1, 3, 10):
            assert specfun.inc_gamma_lower(n, 0.0) == 0.0

    def test_upper_finite_sum(self):
        np.testing.assert_allclose(specfun.inc_gamma_upper(3, 2.0), math.exp(-2) * (4 + 4 + 2), rtol=1e-14)

    def test_complementarity(self):
        for n in range(1, 21):
            for x in np.linspace(0, 50, 26):
                total = specfun.inc_gamma_lower(n, x) + specfun.inc_gamma_upper(n, x)
                np.testing.assert_allclose(total, math.factorial(n - 1), rtol=1e-12)

    def test_regularized(self):
        np.testing.assert_allclose(specfun.inc_gamma_lower_reg(4, 3.0) + specfun.inc_gamma_upper_reg(4, 3.0), 1.0)

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.inc_gamma_lower(2, -1.0)
        with pytest.raises(ValueError):
            specfun.inc_gamma_upper(0, 1.0)

    def test_scaled_moment(self):
        for n in (1, 2, 5, 9):
            for rho in (0.1, 1.0, 7.0):
                ref = rho**n * mpmath.e ** (1 / rho) * mpmath.gammainc(n + 1, 1 / rho)
                np.testing.assert_allclose(specfun.scaled_upper_gamma_moment(n, rho), float(ref), rtol=1e-13)
        assert specfun.scaled_upper_gamma_moment(3, 0.0) == 1.0


class TestMisc:
    def test_binomials(self):
        assert specfun.binomial(10, 3) == 120
        np.testing.assert_allclose(specfun.log_binomial(60, 30), math.log(math.comb(60, 30)), rtol=1e-13)

    def test_log_gamma(self):
        np.testing.assert_allclose(specfun.log_gamma(65), math.log(math.factorial(64)), rtol=1e-14)


class TestSmallArgumentExpansion:
    @staticmethod
    def direct(v, t):
        return t ** (v / 2) * specfun.bessel_k_int(v, 2 * math.sqrt(t))

    def test_v1_at_tiny_argument(self):
        ser = specfun.bessel_k_small_x_expansion(1, 3)
        t = 1e-6
        assert abs(ser(t) - self.direct(1, t)) / self.direct(1, t) < 1e-4

    def test_leading_constant_v2(self):
        ser = specfun.bessel_k_small_x_expansion(2, 2)
        assert ser.terms[0] == (0, 0.5, False)

    def test_alternating_finite_part(self):
        ser = specfun.bessel_k_small_x_expansion(3, 1)
        finite = [c for p, c, lg in ser.terms[:3]]
        assert [math.copysign(1, c) for c in finite] == [1, -1, 1]

    def test_error_shrinks_towards_zero(self):
        # one tail term keeps the truncation error well above roundoff at t = 1e-2
        for v in (1, 2, 3):
            ser = specfun.bessel_k_small_x_expansion(v, 1)
            err = [abs(ser(t) - self.direct(v, t)) for t in (1e-2, 1e-4)]
            assert err[1] < err[0]

    def test_invariants(self):
        ser = specfun.bessel_k_small_x_expansion(4, 3)
        assert ser.truncation_order == 3 and ser.order == 4
        assert all(math.isfinite(c) for _, c, _ in ser.terms)

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.bessel_k_small_x_expansion(0, 2)
        with pytest.raises(ValueError):
            specfun.bessel_k_small_x_expansion(2, 0)


class TestSmallXIdentity:
    @pytest.mark.parametrize("n", range(2, 9))
    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
    def test_identity(self, n, x):
        from afrelay.analytic import lemma1_leading_sum

        np.testing.assert_allclose(lemma1_leading_sum(n, x), math.gamma(n), rtol=1e-9)
