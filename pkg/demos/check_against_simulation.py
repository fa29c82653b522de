"""Compare the exact outage with a seeded Monte Carlo estimate and fit slopes.

Run with ``python demos/check_against_simulation.py``.
"""

from afrelay import Scheme, SystemConfig, Topology, outage_exact
from afrelay.montecarlo import diversity_slope, estimate_outage

SAMPLES = 10**6


def main():
    print("analytic vs simulation at rho1 = rho2 = 10 dB, rho_i = 0 dB, gamma_th = 0 dB")
    for top in Topology:
        for sch in Scheme:
            cfg = SystemConfig(top, sch, 2, 10.0, 10.0, 1.0, 1.0)
            p = outage_exact(cfg).probability
            est = estimate_outage(cfg, n_samples=SAMPLES, seed=1, workers=4)
            z = (est.p_hat - p) / est.sigma(p)
            print(f"  {cfg.label:22s} exact {p:.5f}  simulated {est.p_hat:.5f}  z = {z:+.2f}")

    print("\nhigh-SNR slopes over 30, 40, 50 dB")
    for top in Topology:
        for n in (1, 2, 3):
            pts = []
            for rho1_db in (30, 40, 50):
                rho1 = 10 ** (rho1_db / 10)
                cfg = SystemConfig(top, Scheme.VARIABLE, n, rho1, rho1, 1.0, 1.0, True)
                pts.append((rho1, outage_exact(cfg).probability))
            print(f"  {top.value}/variable N={n}: slope {diversity_slope(pts):.3f}")


if __name__ == "__main__":
    main()
