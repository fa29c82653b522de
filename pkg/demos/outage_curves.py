"""Print exact, high-SNR and lower-bound outage curves for every topology.

Run with ``python demos/outage_curves.py``.
"""

import warnings

import numpy as np

from afrelay import (AsymptoticQuery, PrecisionWarning, Scheme, SystemConfig, Topology, UnsupportedCaseError,
                     outage_exact, outage_high_snr, outage_lower_variable)

N = 2
MU = 1.0
RHO_I = 1.0
GAMMA_TH = 1.0

VARIANTS = [
    (Topology.N11, Scheme.FIXED, False),
    (Topology.N11, Scheme.VARIABLE, False),
    (Topology.ONE_ONE_N, Scheme.FIXED, False),
    (Topology.ONE_ONE_N, Scheme.VARIABLE, False),
    (Topology.ONE_N_ONE, Scheme.FIXED, False),
    (Topology.ONE_N_ONE, Scheme.VARIABLE, False),
    (Topology.ONE_N_ONE, Scheme.VARIABLE, True),
]


def maybe(fn, *args):
    try:
        return f"{fn(*args).probability:.4e}"
    except UnsupportedCaseError:
        return "-"


def main():
    # high-SNR forms go out of range at low SNR and are clamped; that is expected here
    warnings.simplefilter("ignore", PrecisionWarning)
    print(f"{'system':24s} {'rho1 dB':>7s} {'exact':>11s} {'high-SNR':>11s} {'lower':>11s}")
    for top, sch, ici in VARIANTS:
        for rho1_db in np.arange(0, 41, 10):
            rho1 = 10 ** (rho1_db / 10)
            cfg = SystemConfig(top, sch, N, rho1, MU * rho1, RHO_I, GAMMA_TH, ici)
            q = AsymptoticQuery(MU, rho1)
            print(f"{cfg.label:24s} {rho1_db:7.0f} {maybe(outage_exact, cfg):>11s} "
                  f"{maybe(outage_high_snr, cfg, q):>11s} {maybe(outage_lower_variable, cfg):>11s}")
        print()


if __name__ == "__main__":
    main()
