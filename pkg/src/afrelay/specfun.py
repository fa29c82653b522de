"""Scalar special functions used by the outage expressions.

Only integer orders and integer arguments are supported where the outage
formulas never need anything else (Bessel K order, digamma argument,
incomplete-gamma shape).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

EULER_GAMMA = 0.57721566490153286061

# Largest antenna count accepted anywhere in the package.
MAX_ANTENNAS = 64


def _check_x(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"Bessel K argument must be finite and > 0, got {x!r}")
    return arr


def _scaled_bessel_k(v: int, x: np.ndarray) -> np.ndarray:
    """exp(x) * K_v(x) by upward recurrence from the K_0/K_1 kernels."""
    k_prev = special.k0e(x)
    if v == 0:
        return k_prev
    k_cur = special.k1e(x)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(1, v):
            k_prev, k_cur = k_cur, k_prev + (2.0 * j / x) * k_cur
    return k_cur


def bessel_k_int(v: int, x):
    """Modified Bessel function of the second kind K_v(x) for integer v.

    Negative orders are folded with K_{-v} = K_v. Accepts scalar or array
    ``x``; returns a float for scalar input. Values that underflow come back
    as 0.0 and values that overflow as inf (use :func:`log_bessel_k_int`).
    """
    v = abs(int(v))
    arr = _check_x(x)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        out = _scaled_bessel_k(v, arr) * np.exp(-arr)
    out = np.where(np.isnan(out), np.inf, out)
    return float(out) if out.ndim == 0 else out


def log_bessel_k_int(v: int, x):
    """log K_v(x), safe where K_v itself would overflow or underflow.

    Uses the ratio form of the upward recurrence,
    r_j = K_{j+1}/K_j = 1/r_{j-1} + 2j/x, so nothing overflows for large
    orders at small arguments.
    """
    arr = _check_x(x)
    out = _log_scaled_k(abs(int(v)), arr) - arr
    return float(out) if out.ndim == 0 else out


def log_bessel_k_scaled_int(v: int, x):
    """log(e^x K_v(x)); stays O(log x) at large x, so differences keep full precision."""
    out = _log_scaled_k(abs(int(v)), _check_x(x))
    return float(out) if out.ndim == 0 else out


def _log_scaled_k(v: int, arr: np.ndarray) -> np.ndarray:
    k0e = special.k0e(arr)
    out = np.log(k0e)
    if v == 0:
        return out
    ratio = special.k1e(arr) / k0e
    out = out + np.log(ratio)
    for j in range(1, v):
        ratio = 1.0 / ratio + 2.0 * j / arr
        out = out + np.log(ratio)
    return out


def digamma_int(n: int) -> float:
    """psi(n) = -gamma_E + sum_{k=1}^{n-1} 1/k for integer n >= 1."""
    if int(n) != n or n < 1:
        raise ValueError(f"digamma_int needs an integer n >= 1, got {n!r}")
    n = int(n)
    if n > 100_000:
        return float(special.digamma(n))
    return math.fsum([-EULER_GAMMA] + [1.0 / k for k in range(1, n)])


def log_gamma(x: float) -> float:
    return math.lgamma(x)


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)


def log_binomial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check_inc_gamma(n, x):
    if int(n) != n or n < 1:
        raise ValueError(f"incomplete gamma shape must be an integer >= 1, got {n!r}")
    if not (x >= 0):
        raise ValueError(f"incomplete gamma argument must be >= 0, got {x!r}")


def inc_gamma_lower(n: int, x: float) -> float:
    """Lower incomplete gamma gamma(n, x) (not regularized)."""
    _check_inc_gamma(n, x)
    return float(special.gammainc(n, x)) * math.factorial(int(n) - 1)


def inc_gamma_upper(n: int, x: float) -> float:
    """Upper incomplete gamma Gamma(n, x) (not regularized)."""
    _check_inc_gamma(n, x)
    return float(special.gammaincc(n, x)) * math.factorial(int(n) - 1)


def inc_gamma_lower_reg(n: int, x: float) -> float:
    _check_inc_gamma(n, x)
    return float(special.gammainc(n, x))


def inc_gamma_upper_reg(n: int, x: float) -> float:
    _check_inc_gamma(n, x)
    return float(special.gammaincc(n, x))


def scaled_upper_gamma_moment(n: int, rho: float) -> float:
    """rho^n * e^{1/rho} * Gamma(n+1, 1/rho), evaluated without cancellation.

    For integer n this equals n! * sum_{k=0}^{n} rho^k / (n-k)!, which is
    also E[(rho*y + 1)^n] for y ~ Exp(1). rho = 0 gives 1.
    """
    if rho < 0:
        raise ValueError("rho must be >= 0")
    terms = [rho**k / math.factorial(n - k) for k in range(n + 1)]
    return math.factorial(n) * math.fsum(terms)


@dataclass(frozen=True)
class SeriesExpansion:
    """Small-argument expansion of t^{v/2} K_v(2 sqrt(t)) in powers of t.

    Each term is ``(exponent, coefficient, has_log)`` and contributes
    ``coefficient * t**exponent * (log(t) if has_log else 1)``.
    """

    order: int
    terms: tuple[tuple[int, float, bool], ...]
    truncation_order: int

    def __call__(self, t: float) -> float:
        lt = math.log(t)
        return math.fsum(
            c * t**p * (lt if has_log else 1.0) for p, c, has_log in self.terms
        )


def bessel_k_small_x_expansion(v: int, max_terms: int) -> SeriesExpansion:
    """Expansion of (Cx)^{v/2} K_v(2 sqrt(Cx)) around Cx = 0.

    The finite part is (1/2) sum_{k<v} Gamma(v-k)/k! (-t)^k; the tail is
    -((-t)^v / 2) sum_{k<max_terms} (ln t - psi(k+1) - psi(v+k+1)) t^k / (k!(v+k)!).
    """
    if v < 1 or max_terms < 1:
        raise ValueError("need v >= 1 and max_terms >= 1")
    terms: list[tuple[int, float, bool]] = []
    for k in range(v):
        terms.append((k, 0.5 * math.gamma(v - k) / math.factorial(k) * (-1) ** k, False))
    sign = -((-1) ** v) * 0.5
    for k in range(max_terms):
        denom = math.factorial(k) * math.factorial(v + k)
        terms.append((v + k, sign / denom, True))
        terms.append(
            (v + k, -sign * (digamma_int(k + 1) + digamma_int(v + k + 1)) / denom, False)
        )
    return SeriesExpansion(order=v, terms=tuple(terms), truncation_order=max_terms)
