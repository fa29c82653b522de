"""Adaptive integration over [0, inf) for exponentially damped integrands.

Globally adaptive Gauss-Kronrod (7/15) bisection. The half-line is covered
by panels of doubling width starting at ``initial_scale``; panels stop being
added once both the last panel and the exponential tail bound
``f(b) / decay_rate`` fall under a tenth of the current tolerance.

Default tolerances can be overridden through the environment variables
``AFRELAY_QUAD_ABS_TOL`` and ``AFRELAY_QUAD_REL_TOL``.
"""

from __future__ import annotations

import heapq
import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-8
DEFAULT_MAX_EVALS = 1_000_000

ENV_ABS_TOL = "AFRELAY_QUAD_ABS_TOL"
ENV_REL_TOL = "AFRELAY_QUAD_REL_TOL"

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# node layout: -x0..-x6, 0, x6..x0 ; Gauss nodes sit at odd Kronrod indices
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[:3][::-1]

_EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Raised when the error target is not met within the evaluation budget.

    The partial result is kept on the exception as ``partial``.
    """

    def __init__(self, message: str, partial: "QuadResult"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int


def default_tolerances() -> tuple[float, float]:
    """(abs_tol, rel_tol), honouring the environment overrides."""
    abs_tol = float(os.environ.get(ENV_ABS_TOL, DEFAULT_ABS_TOL))
    rel_tol = float(os.environ.get(ENV_REL_TOL, DEFAULT_REL_TOL))
    if not (abs_tol >= 0 and rel_tol >= 0) or abs_tol == rel_tol == 0:
        raise ValueError(f"invalid quadrature tolerances ({abs_tol}, {rel_tol})")
    return abs_tol, rel_tol


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    fx = np.asarray(f(0.5 * (a + b) + half * _NODES), dtype=float)
    if fx.shape != (15,):
        fx = np.broadcast_to(fx, (15,))
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError(f"integrand not finite on [{a}, {b}]")
    kron = half * float(fx @ _KW)
    gauss = half * float(fx @ _GW)
    err = abs(kron - gauss)
    # roundoff floor: below this the difference is noise
    scale = half * float(np.abs(fx) @ _KW)
    err = max(err, 50.0 * _EPS * scale)
    return kron, err


class _Adaptive:
    def __init__(self, f):
        self.f = f
        self.heap: list[tuple[float, float, float, float]] = []
        self.frozen: list[tuple[float, float]] = []
        self.evals = 0
        self.total = 0.0
        self.error = 0.0

    def add(self, a: float, b: float) -> float:
        val, err = _gk15(self.f, a, b)
        self.evals += 15
        heapq.heappush(self.heap, (-err, a, b, val))
        self.total += val
        self.error += err
        return val

    def bisect_worst(self) -> None:
        neg_err, a, b, val = heapq.heappop(self.heap)
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            # at machine resolution: keep its contribution, stop refining it
            self.frozen.append((val, -neg_err))
            return
        self.total -= val
        self.error += neg_err
        self.add(a, mid)
        self.add(mid, b)

    def result(self) -> QuadResult:
        vals = [item[3] for item in self.heap] + [v for v, _ in self.frozen]
        errs = [-item[0] for item in self.heap] + [e for _, e in self.frozen]
        return QuadResult(math.fsum(vals), math.fsum(errs), self.evals)


def _vectorize(f: Callable) -> Callable:
    def g(x):
        if x.size == 1:
            return np.array([float(f(float(x[0])))])
        try:
            out = f(x)
        except TypeError:
            return np.array([f(float(t)) for t in x])
        out = np.asarray(out, dtype=float)
        if out.shape != x.shape:
            return np.array([float(f(float(t))) for t in x])
        return out

    return g


def integrate_interval(
    f: Callable,
    a: float,
    b: float,
    abs_tol: float | None = None,
    rel_tol: float | None = None,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> QuadResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over a finite [a, b]."""
    d_abs, d_rel = default_tolerances()
    abs_tol = d_abs if abs_tol is None else abs_tol
    rel_tol = d_rel if rel_tol is None else rel_tol
    state = _Adaptive(_vectorize(f))
    state.add(a, b)
    return _refine(state, abs_tol, rel_tol, max_evals)


def _refine(state: _Adaptive, abs_tol, rel_tol, max_evals) -> QuadResult:
    while state.heap and state.error > max(abs_tol, rel_tol * abs(state.total)):
        if state.evals + 30 > max_evals:
            partial = state.result()
            raise QuadratureError(
                f"no convergence after {state.evals} evaluations "
                f"(value {partial.value:.6g}, error {partial.abs_error_estimate:.3g})",
                partial,
            )
        state.bisect_worst()
    return state.result()


def integrate_semi_infinite(
    f: Callable,
    decay_rate: float,
    abs_tol: float | None = None,
    rel_tol: float | None = None,
    max_evals: int = DEFAULT_MAX_EVALS,
    initial_scale: float | None = None,
) -> QuadResult:
    """Integrate ``f`` over [0, inf).

    ``decay_rate`` is a rate r such that f(x) decays at least like e^{-r x}
    for large x; it controls where the tail is truncated. ``initial_scale``
    sets the width of the first panel (default 1/decay_rate) and should be
    shrunk when the integrand has a fast transient near 0. A narrow panel
    [0, scale*2^-10] is always split off so endpoint log behaviour is
    resolved separately.
    """
    if not (decay_rate > 0 and math.isfinite(decay_rate)):
        raise ValueError(f"decay_rate must be positive and finite, got {decay_rate!r}")
    d_abs, d_rel = default_tolerances()
    abs_tol = d_abs if abs_tol is None else abs_tol
    rel_tol = d_rel if rel_tol is None else rel_tol
    if abs_tol < 0 or rel_tol < 0 or abs_tol == rel_tol == 0:
        raise ValueError("tolerances must be non-negative and not both zero")

    fv = _vectorize(f)
    state = _Adaptive(fv)
    scale = 1.0 / decay_rate if initial_scale is None else float(initial_scale)
    state.add(0.0, scale * 2.0**-10)
    state.add(scale * 2.0**-10, scale)
    b = scale
    while True:
        panel = state.add(b, 2.0 * b)
        b *= 2.0
        tol = max(abs_tol, rel_tol * abs(state.total))
        tail = abs(float(fv(np.array([b]))[0])) * 2.0 / decay_rate
        if decay_rate * b >= 4.0 and abs(panel) <= 0.1 * tol and tail <= 0.1 * tol:
            break
        if state.evals > max_evals or not math.isfinite(b):
            partial = state.result()
            raise QuadratureError("tail truncation did not converge", partial)
    return _refine(state, abs_tol, rel_tol, max_evals)
