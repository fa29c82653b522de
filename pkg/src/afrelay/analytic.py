"""Outage probability of the three dual-hop AF systems.

Every exact expression and every lower bound has the shape
``1 - sum(positive terms)``. Each term is assembled as a sum of logs (so
large binomials, factorials and small-argument Bessel values never overflow)
and exponentiated once. The subtraction from 1 is where precision goes: at
high SNR the outage can sit far below double-precision resolution of the
sum, so ``precision="auto"`` re-evaluates the same terms with mpmath when
the float64 error estimate misses ``rel_target``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy import special

from afrelay import specfun
from afrelay.model import AsymptoticQuery, Scheme, SystemConfig, Topology
from afrelay.quadrature import (
    QuadResult,
    default_tolerances,
    integrate_semi_infinite,
)

_EPS = np.finfo(float).eps

# relative accuracy asked of the internal (normalized) interference integrals
OUTAGE_QUAD_REL_TOL = 1e-13
DEFAULT_REL_TARGET = 1e-9
CLAMP_WINDOW = 1e-12
# above this N the float64 path carries a precision warning
PRECISION_WARN_N = 16
_MP_DPS_LADDER = (30, 50, 80)


class Method(enum.Enum):
    EXACT_CLOSED_FORM = "exact"
    EXACT_QUADRATURE = "exact-quad"
    LOWER_BOUND = "lower"
    HIGH_SNR_APPROX = "asymptotic"


class UnsupportedCaseError(ValueError):
    """The requested formula does not exist for this configuration."""


class PrecisionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class OutageValue:
    probability: float
    method: Method
    numeric_error: float = 0.0
    precision: str = "double"

    def __float__(self) -> float:
        return self.probability


def _clamped(p: float, err: float, method: Method, precision: str) -> OutageValue:
    if p < 0.0:
        if p < -CLAMP_WINDOW and precision == "double":
            warnings.warn(f"outage {p:.3g} clamped to 0", PrecisionWarning, stacklevel=3)
        err += -p
        p = 0.0
    elif p > 1.0:
        err += p - 1.0
        p = 1.0
    return OutageValue(float(p), method, float(err), precision)


# --------------------------------------------------------------------------
# interference integrals


class Kind(enum.Enum):
    I1 = "I1"  # N-1-1 variable gain
    I2 = "I2"  # 1-1-N variable gain
    I3 = "I3"  # 1-N-1 variable gain with ICI


def _kernel_order_power(kind: Kind, k: int, m: int) -> tuple[int, float]:
    if kind is Kind.I2:
        return k + 1, (k + 1) / 2.0
    return k - m + 1, (k + m + 1) / 2.0


def _kernel_arg(cfg: SystemConfig) -> float:
    g = cfg.gamma_th
    return (g + 1.0) * g / (cfg.rho1 * cfg.rho2)


def _decay_rate(cfg: SystemConfig) -> float:
    return cfg.gamma_th * cfg.rho_i / cfg.rho1 + 1.0


def _normalized_integral(order, power, z, rho_i, rate, abs_tol, rel_tol) -> QuadResult:
    """int_0^inf e^{-rate y} D^power K_order(2 sqrt(z D)) / K_order(2 sqrt(z)) dy, D = 1 + rho_i y."""
    root_z = math.sqrt(z)
    log_k0 = specfun.log_bessel_k_scaled_int(order, 2.0 * root_z)

    def f(y):
        d = 1.0 + rho_i * y
        root_d = np.sqrt(d)
        # 2 sqrt(z D) - 2 sqrt(z), without the subtraction
        shift = 2.0 * root_z * rho_i * y / (root_d + 1.0)
        return np.exp(-rate * y - shift + power * np.log1p(rho_i * y)
                      + specfun.log_bessel_k_scaled_int(order, 2.0 * root_z * root_d) - log_k0)

    # the Bessel factor adds a decay of about sqrt(z)*rho_i near y = 0
    scale = 1.0 / (rate + math.sqrt(z) * rho_i)
    return integrate_semi_infinite(f, rate * 0.5, abs_tol=abs_tol, rel_tol=rel_tol,
                                   initial_scale=scale)


def interference_integral(
    kind: Kind | str,
    cfg: SystemConfig,
    k: int,
    m: int = 0,
    abs_tol: float | None = None,
    rel_tol: float | None = None,
) -> QuadResult:
    """One of the single integrals over the interferer gain y3 ~ Exp(1).

    I1 and I3 share the integrand e^{-(g rho_i/rho1 + 1) y} D^{(k+m+1)/2}
    K_{k-m+1}(2 sqrt(z D)); I2 uses order k+1 and power (k+1)/2. Here
    D = rho_i y + 1 and z = (g+1) g / (rho1 rho2).
    """
    kind = Kind(kind)
    order, power = _kernel_order_power(kind, k, m)
    z = _kernel_arg(cfg)
    d_abs, d_rel = default_tolerances()
    abs_tol = d_abs if abs_tol is None else abs_tol
    rel_tol = d_rel if rel_tol is None else rel_tol
    scale = specfun.bessel_k_int(order, 2.0 * math.sqrt(z))
    res = _normalized_integral(order, power, z, cfg.rho_i, _decay_rate(cfg),
                               abs_tol / scale if abs_tol else 0.0, rel_tol)
    return QuadResult(res.value * scale, res.abs_error_estimate * scale, res.evaluations)


# --------------------------------------------------------------------------
# numeric backends shared by the term builders


class _DoubleOps:
    name = "double"

    def __init__(self):
        self._cache: dict = {}

    f = staticmethod(float)
    log = staticmethod(math.log)
    sqrt = staticmethod(math.sqrt)

    @staticmethod
    def log_fact(n: int) -> float:
        return math.lgamma(n + 1)

    @staticmethod
    def log_binom(n: int, k: int) -> float:
        return specfun.log_binomial(n, k)

    @staticmethod
    def log_k(v: int, x) -> float:
        return specfun.log_bessel_k_int(v, x)

    @staticmethod
    def log_q(n: int, x) -> float:
        q = special.gammaincc(n, x)
        return math.log(q) if q > 0 else -math.inf

    @staticmethod
    def term(*parts, rel: float = 0.0):
        s = math.fsum(parts)
        return s, 8.0 * _EPS * (1.0 + math.fsum(abs(p) for p in parts)) + rel

    def log_integral(self, order, power, z, rho_i, rate):
        key = (order, power)
        if key not in self._cache:
            res = _normalized_integral(order, power, z, rho_i, rate, 0.0, OUTAGE_QUAD_REL_TOL)
            log_val = math.log(res.value) + specfun.log_bessel_k_int(order, 2.0 * math.sqrt(z))
            self._cache[key] = (log_val, res.abs_error_estimate / res.value + 64 * _EPS)
        return self._cache[key]

    @staticmethod
    def total(terms):
        vals = [math.exp(lv) for lv, _ in terms]
        s = math.fsum(vals)
        err = math.fsum(v * r for v, (_, r) in zip(vals, terms)) + 4 * _EPS
        return 1.0 - s, err


class _MpOps:
    name = "extended"

    def __init__(self):
        self._cache: dict = {}
        self._k_rows: dict = {}

    f = staticmethod(mpmath.mpf)
    log = staticmethod(mpmath.log)
    sqrt = staticmethod(mpmath.sqrt)

    @staticmethod
    def log_fact(n: int):
        return mpmath.log(mpmath.factorial(n))

    @staticmethod
    def log_binom(n: int, k: int):
        return mpmath.log(math.comb(n, k))

    @staticmethod
    def log_k(v: int, x):
        return mpmath.log(mpmath.besselk(abs(v), x))

    @staticmethod
    def log_q(n: int, x):
        return mpmath.log(mpmath.gammainc(n, x, mpmath.inf, regularized=True))

    @staticmethod
    def term(*parts, rel=0):
        return mpmath.fsum(parts), rel

    def _bessel_row(self, x, v: int):
        # K_0..K_v at x; tanh-sinh revisits the same nodes for every integral
        row = self._k_rows.get(x)
        if row is None:
            row = [mpmath.besselk(0, x), mpmath.besselk(1, x)]
            self._k_rows[x] = row
        while len(row) <= v:
            j = len(row) - 1
            row.append(row[j - 1] + 2 * j / x * row[j])
        return row

    def log_integral(self, order, power, z, rho_i, rate):
        key = (order, power)
        if key not in self._cache:
            v = abs(order)
            root_z = mpmath.sqrt(z)
            k0 = self._bessel_row(2 * root_z, v)[v]

            def f(y):
                d = 1 + rho_i * y
                return mpmath.exp(-rate * y) * d**power * self._bessel_row(2 * root_z * mpmath.sqrt(d), v)[v] / k0

            s = 1 / (rate + root_z * rho_i)
            pts = [mpmath.mpf(0), s / 1024, s]
            while pts[-1] * rate < 60:
                pts.append(pts[-1] * 2)
            pts.append(mpmath.inf)
            val, err = mpmath.quad(f, pts, error=True)
            self._cache[key] = (mpmath.log(val) + mpmath.log(k0), err / val)
        return self._cache[key]

    @staticmethod
    def total(terms):
        vals = [mpmath.exp(lv) for lv, _ in terms]
        s = mpmath.fsum(vals)
        err = mpmath.fsum(v * r for v, (_, r) in zip(vals, terms))
        err += mpmath.mpf(10) ** (-mpmath.mp.dps + 3)
        return 1 - s, err


TermBuilder = Callable[[object, SystemConfig], list]


def _evaluate(builder: TermBuilder, cfg: SystemConfig, method: Method,
              precision: str, rel_target: float) -> OutageValue:
    if precision not in ("auto", "double", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    if precision != "extended":
        if precision == "double" and cfg.n_antennas > PRECISION_WARN_N:
            warnings.warn(f"N={cfg.n_antennas} > {PRECISION_WARN_N}: float64 sums may lose accuracy",
                          PrecisionWarning, stacklevel=3)
        p, err = _DoubleOps.total(builder(_DoubleOps(), cfg))
        if precision == "double" or (p > 0 and err <= rel_target * p):
            return _clamped(p, err, method, "double")
    for dps in _MP_DPS_LADDER:
        with mpmath.workdps(dps):
            p, err = _MpOps.total(builder(_MpOps(), cfg))
            if p > 0 and err <= rel_target * p:
                break
    if not (p > 0 and err <= rel_target * p):
        warnings.warn(f"{cfg.label}: outage {float(p):.3g} only resolved to +-{float(err):.2g}",
                      PrecisionWarning, stacklevel=2)
    return _clamped(float(p), float(err), method, "extended")


# --------------------------------------------------------------------------
# exact expressions as term lists (outage = 1 - sum exp(term))


def _log_pow(ops, base, power):
    # base**power in log form with 0**0 = 1
    if power == 0:
        return 0
    return power * ops.log(base)


def _n11_fixed_terms(ops, cfg):
    n = cfg.n_antennas
    r1, r2, ri, g = (ops.f(v) for v in (cfg.rho1, cfg.rho2, cfg.rho_i, cfg.gamma_th))
    a = g / r1
    c = (n * r1 + ri + 1) / r2
    arg = 2 * ops.sqrt(a * c)
    log_1pai = ops.log(1 + a * ri)
    terms = []
    for m in range(n):
        for j in range(m + 1):
            for k in range(j + 1):
                if k > 0 and cfg.rho_i == 0:
                    continue
                v = k - j + 1
                terms.append(ops.term(
                    ops.log(2) - a, m * ops.log(a), -ops.log_fact(m),
                    ops.log_binom(m, j), ops.log_binom(j, k),
                    ops.log_fact(k), _log_pow(ops, ri, k), -(k + 1) * log_1pai,
                    ops.f(v) / 2 * ops.log(a), ops.f(j - k + 1) / 2 * ops.log(c),
                    ops.log_k(v, arg),
                ))
    return terms


def _single_kn_terms(ops, cfg, big_c):
    # shared by the 1-1-N and 1-N-1 fixed-gain systems
    n = cfg.n_antennas
    r1, r2, ri, g = (ops.f(v) for v in (cfg.rho1, cfg.rho2, cfg.rho_i, cfg.gamma_th))
    a = g / r1
    t = big_c(n, r1, ri) * g / (r1 * r2)
    return [ops.term(
        ops.log(2) - a, -ops.log_fact(n - 1), -ops.log(1 + a * ri),
        ops.f(n) / 2 * ops.log(t), ops.log_k(n, 2 * ops.sqrt(t)),
    )]


def _11n_fixed_terms(ops, cfg):
    return _single_kn_terms(ops, cfg, lambda n, r1, ri: r1 + ri + 1)


def _1n1_fixed_terms(ops, cfg):
    return _single_kn_terms(ops, cfg, lambda n, r1, ri: n * r1 + n * ri + 1)


def _1n1_variable_noici_terms(ops, cfg):
    n = cfg.n_antennas
    r1, r2, ri, g = (ops.f(v) for v in (cfg.rho1, cfg.rho2, cfg.rho_i, cfg.gamma_th))
    a = g / r1
    c = (n * r1 + ri + 1) / r2
    arg = 2 * ops.sqrt(a * c)
    log_1pai = ops.log(1 + a * ri)
    terms = []
    for m in range(n):
        for i in range(m + 1):
            for j in range(i + 1):
                if j > 0 and cfg.rho_i == 0:
                    continue
                v = n + j - i
                terms.append(ops.term(
                    ops.log(2) - a, -ops.log_fact(n - 1), m * ops.log(a), -ops.log_fact(m),
                    ops.log_binom(m, i), ops.log_binom(i, j),
                    _log_pow(ops, ri, j), ops.log_fact(j), -(j + 1) * log_1pai,
                    ops.f(v) / 2 * ops.log(a), ops.f(n + i - j) / 2 * ops.log(c),
                    ops.log_k(v, arg),
                ))
    return terms


def _variable_quad_terms(ops, cfg, n1: int, n2: int):
    """Variable-gain exact outage with y1 ~ Gamma(n1), y2 ~ Gamma(n2).

    Covers N-1-1 (n1=N, n2=1), 1-1-N (n1=1, n2=N) and the 1-N-1 relay with
    ICI (n1=n2=N); the inner index runs over k <= n2 + j - 1.
    """
    r1, r2, ri, g = (ops.f(v) for v in (cfg.rho1, cfg.rho2, cfg.rho_i, cfg.gamma_th))
    a = g / r1
    z = (g + 1) * g / (r1 * r2)
    rate = g * ri / r1 + 1
    head = ops.log(2) - a - g / r2 - ops.log_fact(n2 - 1)
    terms = []
    for m in range(n1):
        for j in range(m + 1):
            top = n2 + j - 1
            for k in range(top + 1):
                order = k - m + 1
                power = (k + m + 1) / 2.0
                log_i, qrel = ops.log_integral(order, power, z, ri, rate)
                terms.append(ops.term(
                    head, m * ops.log(a), -ops.log_fact(m), ops.log_binom(m, j),
                    -(m - j) * ops.log(r2), ops.log_binom(top, k),
                    _log_pow(ops, g / r2, top - k),
                    ops.f(order) / 2 * ops.log(z), log_i,
                    rel=qrel,
                ))
    return terms


def _check_topology(cfg: SystemConfig, topology: Topology):
    if cfg.topology is not topology:
        raise UnsupportedCaseError(f"expected a {topology.value} system, got {cfg.topology.value}")


def outage_exact_n11(cfg: SystemConfig, precision: str = "auto",
                     rel_target: float = DEFAULT_REL_TARGET) -> OutageValue:
    """Exact outage of the N-1-1 system (transmit beamforming at the source)."""
    _check_topology(cfg, Topology.N11)
    if cfg.scheme is Scheme.FIXED:
        return _evaluate(_n11_fixed_terms, cfg, Method.EXACT_CLOSED_FORM, precision, rel_target)
    n = cfg.n_antennas
    return _evaluate(lambda ops, c: _variable_quad_terms(ops, c, n, 1), cfg,
                     Method.EXACT_QUADRATURE, precision, rel_target)


def outage_exact_11n(cfg: SystemConfig, precision: str = "auto",
                     rel_target: float = DEFAULT_REL_TARGET) -> OutageValue:
    """Exact outage of the 1-1-N system (MRC at the destination)."""
    _check_topology(cfg, Topology.ONE_ONE_N)
    if cfg.scheme is Scheme.FIXED:
        return _evaluate(_11n_fixed_terms, cfg, Method.EXACT_CLOSED_FORM, precision, rel_target)
    n = cfg.n_antennas
    return _evaluate(lambda ops, c: _variable_quad_terms(ops, c, 1, n), cfg,
                     Method.EXACT_QUADRATURE, precision, rel_target)


def outage_exact_1n1(cfg: SystemConfig, precision: str = "auto",
                     rel_target: float = DEFAULT_REL_TARGET) -> OutageValue:
    """Exact outage of the 1-N-1 system.

    Fixed gain uses W = w I; variable gain uses the MRC/MRT relay matrix,
    with either the average-power gain (``ici_at_relay=False``) or the
    instantaneous gain that knows the interferer channel.
    """
    _check_topology(cfg, Topology.ONE_N_ONE)
    if cfg.scheme is Scheme.FIXED:
        return _evaluate(_1n1_fixed_terms, cfg, Method.EXACT_CLOSED_FORM, precision, rel_target)
    if not cfg.ici_at_relay:
        return _evaluate(_1n1_variable_noici_terms, cfg, Method.EXACT_CLOSED_FORM,
                         precision, rel_target)
    n = cfg.n_antennas
    return _evaluate(lambda ops, c: _variable_quad_terms(ops, c, n, n), cfg,
                     Method.EXACT_QUADRATURE, precision, rel_target)


def outage_exact(cfg: SystemConfig, precision: str = "auto",
                 rel_target: float = DEFAULT_REL_TARGET) -> OutageValue:
    fn = {
        Topology.N11: outage_exact_n11,
        Topology.ONE_ONE_N: outage_exact_11n,
        Topology.ONE_N_ONE: outage_exact_1n1,
    }[cfg.topology]
    return fn(cfg, precision=precision, rel_target=rel_target)


# --------------------------------------------------------------------------
# lower bounds: 1 - Pr(first hop SINR >= g) Pr(second hop SNR >= g)


def _first_hop_success_terms(ops, cfg, n1: int, log_second):
    r1, ri, g = (ops.f(v) for v in (cfg.rho1, cfg.rho_i, cfg.gamma_th))
    a = g / r1
    log_1pai = ops.log(1 + a * ri)
    terms = []
    for m in range(n1):
        for j in range(m + 1):
            if j > 0 and cfg.rho_i == 0:
                continue
            terms.append(ops.term(
                log_second, -a, m * ops.log(a), -ops.log_fact(m), ops.log_binom(m, j),
                ops.log_fact(j), _log_pow(ops, ri, j), -(j + 1) * log_1pai,
            ))
    return terms


def outage_lower_variable(cfg: SystemConfig, precision: str = "auto",
                          rel_target: float = DEFAULT_REL_TARGET) -> OutageValue:
    """Closed-form lower bound on the variable-gain outage.

    Available for N-1-1, 1-1-N and the 1-N-1 relay with ICI.
    """
    if cfg.scheme is not Scheme.VARIABLE:
        raise UnsupportedCaseError("lower bound exists only for variable-gain relaying")
    n = cfg.n_antennas
    if cfg.topology is Topology.N11:
        n1, n2 = n, 1
    elif cfg.topology is Topology.ONE_ONE_N:
        n1, n2 = 1, n
    elif cfg.ici_at_relay:
        n1, n2 = n, n
    else:
        raise UnsupportedCaseError("no lower bound for the 1-N-1 relay without ICI")

    def builder(ops, c):
        log_second = ops.log_q(n2, ops.f(c.gamma_th) / ops.f(c.rho2))
        return _first_hop_success_terms(ops, c, n1, log_second)

    return _evaluate(builder, cfg, Method.LOWER_BOUND, precision, rel_target)


# --------------------------------------------------------------------------
# high-SNR approximations, rho2 = mu * rho1


def _require_n2(cfg, what):
    if cfg.n_antennas < 2:
        raise UnsupportedCaseError(f"{what} high-SNR approximation needs N >= 2")


def outage_high_snr(cfg: SystemConfig, q: AsymptoticQuery) -> OutageValue:
    """High-SNR outage approximation at rho1 = q.rho1, rho2 = q.mu * q.rho1.

    ``cfg.rho1`` and ``cfg.rho2`` are ignored; topology, scheme, N, rho_i
    and the threshold come from ``cfg``.
    """
    n, ri, g = cfg.n_antennas, cfg.rho_i, cfg.gamma_th
    mu = q.mu
    a = g / q.rho1
    psi = specfun.digamma_int
    top, scheme = cfg.topology, cfg.scheme

    if top is Topology.N11 and scheme is Scheme.FIXED:
        if n == 1:
            p = ((math.log(mu * q.rho1 / g) + psi(1) + psi(2)) / mu + ri + 1.0) * a
        else:
            p = n / (mu * (n - 1)) * a
    elif top is Topology.N11:
        p = (1.0 / mu + ri + 1.0) * a if n == 1 else a / mu
    elif top is Topology.ONE_ONE_N and scheme is Scheme.FIXED:
        _require_n2(cfg, "1-1-N fixed-gain")
        p = (ri + 1.0 + 1.0 / ((n - 1) * mu)) * a
    elif top is Topology.ONE_ONE_N:
        _require_n2(cfg, "1-1-N variable-gain")
        p = (1.0 + ri) * a
    elif scheme is Scheme.FIXED:
        _require_n2(cfg, "1-N-1 fixed-gain")
        p = (1.0 + ri + n / (mu * (n - 1))) * a
    elif not cfg.ici_at_relay:
        p = _min_cdf_equal_orders(n, n / mu * a)
    else:
        _require_n2(cfg, "1-N-1 variable-gain with ICI")
        moment = specfun.scaled_upper_gamma_moment(n, ri)
        p = (moment + mu**-n) * a**n / math.factorial(n)
    # the approximations are not probabilities away from high SNR; cap at 1
    return _clamped(float(p), 0.0, Method.HIGH_SNR_APPROX, "double")


def coefficient_report(n: int, mu: float, rho_i: float) -> tuple[float, float, float]:
    """High-SNR fixed-gain coefficients (a_N11, a_11N, a_1N1) of gamma_th/rho1."""
    if n < 2:
        raise UnsupportedCaseError("coefficients need N >= 2")
    a_n11 = n / (mu * (n - 1))
    a_11n = rho_i + 1.0 + 1.0 / (mu * (n - 1))
    a_1n1 = 1.0 + rho_i + n / (mu * (n - 1))
    return a_n11, a_11n, a_1n1


# --------------------------------------------------------------------------
# distribution lemmas


@dataclass(frozen=True)
class LemmaRatioParams:
    """U = a y1 / (b y2 + 1), y1 ~ Gamma(n1, scale lambda1), y2 ~ Exp(mean lambda2)."""

    n1: int
    lambda1: float
    lambda2: float
    a: float
    b: float

    def __post_init__(self):
        if self.n1 < 1 or self.lambda1 <= 0 or self.lambda2 <= 0 or self.a <= 0 or self.b < 0:
            raise ValueError(f"invalid lemma parameters {self}")


@dataclass(frozen=True)
class LemmaProductParams:
    """U = y1 (y2 - a b) / (y2 + a), y_i ~ Gamma(n_i, scale lambda_i)."""

    n1: int
    n2: int
    lambda1: float
    lambda2: float
    a: float
    b: float

    def __post_init__(self):
        if (self.n1 < 1 or self.n2 < 1 or self.lambda1 <= 0 or self.lambda2 <= 0
                or self.a <= 0 or self.b < 0):
            raise ValueError(f"invalid lemma parameters {self}")


@dataclass(frozen=True)
class LemmaMinParams:
    """U = y1 min(1/(y3+1), y2/c), y_i ~ Gamma(n_i), y3 ~ Exp(mean lambda3).

    Only n2 = 1 (with n1 >= 2) and n1 = n2 are supported.
    """

    n1: int
    n2: int
    lambda3: float
    c: float

    def __post_init__(self):
        if self.n2 == 1 and self.n1 == 1:
            raise ValueError("the n2 = 1 case needs n1 >= 2")
        if not (self.n2 == 1 or self.n1 == self.n2):
            raise UnsupportedCaseError(f"unsupported case n1={self.n1}, n2={self.n2}")
        if self.c <= 0 or self.lambda3 < 0:
            raise ValueError(f"invalid lemma parameters {self}")


def lemma_cdf_ratio(p: LemmaRatioParams, x: float) -> float:
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 0.0
    q = x / (p.a * p.lambda1)
    total = []
    for m in range(p.n1):
        for j in range(m + 1):
            if j > 0 and p.b == 0:
                continue
            log_t = (-q + m * math.log(q) - math.lgamma(m + 1) + specfun.log_binomial(m, j)
                     + math.lgamma(j + 1) + (j * math.log(p.b) if j else 0.0)
                     - math.log(p.lambda2) - (j + 1) * math.log(p.b * x / (p.a * p.lambda1) + 1 / p.lambda2))
            total.append(math.exp(log_t))
    return min(1.0, max(0.0, 1.0 - math.fsum(total)))


def lemma_cdf_product(p: LemmaProductParams, x: float) -> float:
    """CDF of y1 (y2 - ab)/(y2 + a) at x >= 0.

    Negative values of U (y2 < ab) are included, so F(0) = Pr(y2 <= ab).
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    ab = p.a * p.b
    if x == 0:
        return float(special.gammainc(p.n2, ab / p.lambda2))
    lam1, lam2 = p.lambda1, p.lambda2
    # logs throughout so subnormal x stays usable
    log_xl = math.log(x) - math.log(lam1)
    log_s = math.log(p.a) + math.log1p(p.b) + log_xl
    arg = 2.0 * math.exp(0.5 * (log_s - math.log(lam2)))
    head = -x / lam1 - ab / lam2 - p.n2 * math.log(lam2) - math.lgamma(p.n2) + math.log(2.0)
    total = []
    for m in range(p.n1):
        for j in range(m + 1):
            top = p.n2 + j - 1
            for k in range(top + 1):
                if top - k > 0 and ab == 0:
                    continue
                v = k - m + 1
                log_t = (head + m * log_xl - math.lgamma(m + 1)
                         + specfun.log_binomial(m, j) + (m - j) * math.log(p.a)
                         + specfun.log_binomial(top, k)
                         + ((top - k) * math.log(ab) if top - k else 0.0)
                         + v / 2.0 * (log_s + math.log(lam2)) + specfun.log_bessel_k_int(v, arg))
                total.append(math.exp(log_t))
    return min(1.0, max(0.0, 1.0 - math.fsum(total)))


def lemma_cdf_min_asym(p: LemmaMinParams, x: float) -> float:
    """Small-x CDF approximation of y1 min(1/(y3+1), y2/c)."""
    if not x > 0:
        raise ValueError("x must be > 0")
    cx = p.c * x
    if p.n2 == 1:
        return cx / (p.n1 - 1)
    return _min_cdf_equal_orders(p.n1, cx)


def _min_cdf_equal_orders(n: int, cx: float) -> float:
    psi = specfun.digamma_int
    lcx = math.log(cx)
    acc = math.fsum(
        (-1) ** (n - i) * (lcx - psi(1) - psi(n - i + 1))
        / (math.factorial(n - 1) * math.factorial(i) * math.factorial(n - i))
        for i in range(n)
    )
    return acc * cx**n


def lemma1_leading_sum(n: int, x: float) -> float:
    """sum_i x^i/i! sum_{k<n-i} Gamma(n-i-k)/k! (-x)^k, which equals Gamma(n)."""
    return math.fsum(
        x**i / math.factorial(i) * math.gamma(n - i - k) / math.factorial(k) * (-x) ** k
        for i in range(n)
        for k in range(n - i)
    )
