import math

import numpy as np
import pytest

from afrelay import quadrature as qd
from afrelay.specfun import bessel_k_int


def k0_damped(x):
    return bessel_k_int(0, np.asarray(x) + 1.0) * np.exp(-np.asarray(x))


def dense_trapezoid_oracle():
    # fixed grid, step 1e-4 on [0, 40]; tail beyond 40 is below 1e-30
    x = np.linspace(0.0, 40.0, 400_001)
    trap = getattr(np, "trapezoid", None) or np.trapz
    return float(trap(k0_damped(x), x))


ORACLE = dense_trapezoid_oracle()


class TestSemiInfinite:
    def test_exponential(self):
        r = qd.integrate_semi_infinite(lambda x: np.exp(-x), 1.0, abs_tol=1e-10, rel_tol=1e-10)
        np.testing.assert_allclose(r.value, 1.0, rtol=1e-10)
        assert r.abs_error_estimate >= 0 and r.evaluations >= 1

    def test_gamma_four(self):
        r = qd.integrate_semi_infinite(lambda x: x**3 * np.exp(-x), 1.0)
        np.testing.assert_allclose(r.value, 6.0, rtol=1e-8)

    def test_against_dense_grid_oracle(self):
        r = qd.integrate_semi_infinite(k0_damped, 1.0, abs_tol=1e-12, rel_tol=1e-12)
        assert abs(r.value - ORACLE) < 1e-8

    def test_log_singularity_at_zero(self):
        # int_0^inf K_0(x) dx = pi/2
        r = qd.integrate_semi_infinite(lambda x: bessel_k_int(0, x), 1.0, abs_tol=1e-12, rel_tol=1e-12)
        np.testing.assert_allclose(r.value, math.pi / 2, rtol=1e-10)

    def test_tighter_tolerance_within_loose_error(self):
        loose = qd.integrate_semi_infinite(k0_damped, 1.0, abs_tol=1e-6, rel_tol=1e-6)
        tight = qd.integrate_semi_infinite(k0_damped, 1.0, abs_tol=1e-8, rel_tol=1e-8)
        assert abs(tight.value - loose.value) <= loose.abs_error_estimate

    def test_tolerance_monotone_against_oracle(self):
        errs = [abs(qd.integrate_semi_infinite(k0_damped, 1.0, abs_tol=t, rel_tol=t).value - ORACLE)
                for t in (1e-4, 1e-7, 1e-10)]
        assert errs[2] <= errs[1] + 1e-12 <= errs[0] + 2e-12

    def test_linearity(self):
        f = lambda x: np.exp(-x)
        g = k0_damped
        rf = qd.integrate_semi_infinite(f, 1.0)
        rg = qd.integrate_semi_infinite(g, 1.0)
        rs = qd.integrate_semi_infinite(lambda x: 2.0 * f(x) - 3.0 * g(x), 1.0)
        slack = 2 * rf.abs_error_estimate + 3 * rg.abs_error_estimate + rs.abs_error_estimate
        assert abs(rs.value - (2 * rf.value - 3 * rg.value)) <= slack + 1e-15

    def test_scalar_only_integrand(self):
        r = qd.integrate_semi_infinite(lambda x: math.exp(-2.0 * x), 2.0)
        np.testing.assert_allclose(r.value, 0.5, rtol=1e-8)

    def test_budget_exhaustion_carries_partial(self):
        with pytest.raises(qd.QuadratureError) as info:
            qd.integrate_semi_infinite(lambda x: np.abs(np.sin(1e4 * x)) * np.exp(-x), 1.0,
                                       abs_tol=1e-15, rel_tol=1e-15, max_evals=2000)
        assert info.value.partial.evaluations > 0

    @pytest.mark.parametrize("rate", [0.0, -1.0, math.inf])
    def test_bad_rate(self, rate):
        with pytest.raises(ValueError):
            qd.integrate_semi_infinite(lambda x: np.exp(-x), rate)

    def test_bad_tolerances(self):
        with pytest.raises(ValueError):
            qd.integrate_semi_infinite(lambda x: np.exp(-x), 1.0, abs_tol=0.0, rel_tol=0.0)

    def test_non_finite_integrand(self):
        with pytest.raises(FloatingPointError):
            qd.integrate_semi_infinite(lambda x: np.full_like(x, np.nan), 1.0)


class TestInterval:
    def test_polynomial_exact(self):
        r = qd.integrate_interval(lambda x: x**5 - 2 * x, 0.0, 2.0)
        np.testing.assert_allclose(r.value, 64 / 6 - 4, rtol=1e-13)


class TestEnvironment:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv(qd.ENV_ABS_TOL, raising=False)
        monkeypatch.delenv(qd.ENV_REL_TOL, raising=False)
        assert qd.default_tolerances() == (1e-10, 1e-8)

    def test_override(self, monkeypatch):
        monkeypatch.setenv(qd.ENV_ABS_TOL, "1e-6")
        monkeypatch.setenv(qd.ENV_REL_TOL, "1e-5")
        assert qd.default_tolerances() == (1e-6, 1e-5)

    def test_invalid_override(self, monkeypatch):
        monkeypatch.setenv(qd.ENV_ABS_TOL, "0")
        monkeypatch.setenv(qd.ENV_REL_TOL, "0")
        with pytest.raises(ValueError):
            qd.default_tolerances()
