import math

import numpy as np
import pytest

from afrelay import analytic as an
from afrelay.model import SystemConfig
from afrelay.montecarlo import McEstimate, diversity_slope, empirical_cdf, estimate_outage


def n11_fixed(rho_i=0.0, gamma_th=1.0):
    return SystemConfig("n11", "fixed", 1, 10.0, 10.0, rho_i, gamma_th)


class TestEstimateOutage:
    def test_matches_closed_form_without_interference(self):
        c = n11_fixed()
        est = estimate_outage(c, 10**6, seed=9)
        p = an.outage_exact(c).probability
        assert abs(est.p_hat - p) <= 4 * est.sigma(p)

    def test_tiny_threshold_gives_no_outage(self):
        est = estimate_outage(n11_fixed(gamma_th=1e-12), 10**5, seed=1)
        assert est.n_outage == 0 and est.p_hat == 0.0 and est.ci_half_width_95 == 0.0 and est.flagged

    def test_deterministic(self):
        c = SystemConfig("1n1", "variable", 2, 5.0, 5.0, 1.0, 1.0, True)
        assert estimate_outage(c, 50_000, seed=42) == estimate_outage(c, 50_000, seed=42)

    def test_seed_matters(self):
        c = n11_fixed(rho_i=1.0)
        assert estimate_outage(c, 50_000, seed=1).n_outage != estimate_outage(c, 50_000, seed=2).n_outage

    def test_workers_do_not_change_result(self):
        c = SystemConfig("11n", "variable", 3, 4.0, 4.0, 1.0, 1.0)
        serial = estimate_outage(c, 300_000, seed=3, chunk_size=10_000)
        threaded = estimate_outage(c, 300_000, seed=3, chunk_size=10_000, workers=4)
        assert serial == threaded

    def test_single_chunk_vs_many_chunks_same_stream_policy(self):
        # with one chunk covering everything, the sample stream equals chunk 0 of any larger chunk size
        c = n11_fixed(rho_i=1.0)
        a = estimate_outage(c, 20_000, seed=8, chunk_size=20_000)
        b = estimate_outage(c, 20_000, seed=8, chunk_size=2**16)
        assert a == b

    def test_estimate_fields(self):
        est = estimate_outage(n11_fixed(rho_i=1.0), 10_000, seed=0)
        assert est.p_hat == est.n_outage / est.n_samples
        np.testing.assert_allclose(est.ci_half_width_95, 1.96 * math.sqrt(est.p_hat * (1 - est.p_hat) / 10_000))
        assert est.seed == 0 and est.n_samples == 10_000

    @pytest.mark.parametrize("sampler", ["vector", "equivalent"])
    def test_samplers_agree_with_analytic(self, sampler):
        c = SystemConfig("1n1", "fixed", 2, 10.0, 10.0, 1.0, 1.0)
        est = estimate_outage(c, 10**6, seed=4, sampler=sampler)
        p = an.outage_exact(c).probability
        assert abs(est.p_hat - p) <= 4 * est.sigma(p)

    def test_invalid_arguments(self):
        c = n11_fixed()
        with pytest.raises(ValueError):
            estimate_outage(c, 999)
        with pytest.raises(ValueError):
            estimate_outage(c, 10_000, sampler="other")
        with pytest.raises(ValueError):
            estimate_outage(c, 10_000, seed=-1)

    @pytest.mark.slow
    def test_coverage(self):
        c = SystemConfig("n11", "fixed", 2, 10.0, 10.0, 1.0, 1.0)
        p = an.outage_exact(c).probability
        hits = 0
        for rep in range(200):
            est = estimate_outage(c, 5_000, seed=1000 + rep, sampler="equivalent")
            hits += abs(est.p_hat - p) <= est.ci_half_width_95
        assert hits >= 180


class TestEmpiricalCdf:
    def test_constant_sampler(self):
        f = empirical_cdf(lambda rng, n: np.full(n, 2.0), [1.0, 2.0, 3.0], 1000)
        assert f == [0.0, 1.0, 1.0]

    def test_exponential_median(self):
        n = 10**6
        f = empirical_cdf(lambda rng, m: rng.exponential(1.0, m), [math.log(2)], n, seed=3)[0]
        assert abs(f - 0.5) <= 4 * math.sqrt(0.25 / n)

    def test_nondecreasing_and_reproducible(self):
        xs = np.linspace(0, 3, 25)
        draw = lambda rng, m: rng.gamma(2.0, 1.0, m)
        a = empirical_cdf(draw, xs, 30_000, seed=5)
        assert np.all(np.diff(a) >= 0) and a == empirical_cdf(draw, xs, 30_000, seed=5)

    def test_unsorted(self):
        with pytest.raises(ValueError):
            empirical_cdf(lambda rng, n: rng.random(n), [0.5, 0.1], 100)


class TestDiversitySlope:
    def test_inverse_first_power(self):
        pts = [(r, 3.0 / r) for r in (1e3, 1e4, 1e5)]
        assert abs(diversity_slope(pts) - 1.0) < 1e-12

    def test_inverse_square(self):
        assert abs(diversity_slope([(r, 0.5 / r**2) for r in (10.0, 100.0, 1000.0)]) - 2.0) < 1e-12

    def test_relay_with_interferer_csi_two_antennas(self):
        pts = []
        for r in (1e3, 1e4, 1e5):
            c = SystemConfig("1n1", "variable", 2, r, r, 1.0, 1.0, True)
            pts.append((r, an.outage_exact(c).probability))
        assert 1.8 <= diversity_slope(pts) <= 2.2

    @pytest.mark.parametrize("pts", [[(1.0, 0.1)], [(1.0, 0.1), (1.0, 0.01)], [(1.0, 0.0), (10.0, 0.01)],
                                     [(1.0, -0.1), (10.0, 0.01)]])
    def test_invalid(self, pts):
        with pytest.raises(ValueError):
            diversity_slope(pts)
