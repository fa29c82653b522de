"""Seeded Monte Carlo outage estimation.

Samples are drawn in fixed-size chunks. Chunk ``i`` of a run with master
seed ``s`` uses ``PCG64(SeedSequence(s, spawn_key=(i,)))``, so a run is
reproducible from ``(seed, n_samples, chunk_size)`` alone and the result does
not depend on how many worker threads processed the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from afrelay.model import SystemConfig, sample_sinr_equivalent, sample_sinr_vector

DEFAULT_SAMPLES = 10**7
DEFAULT_CHUNK = 2**16
MIN_SAMPLES = 1000
# below this many outage events the normal-approximation CI is unreliable
MIN_RELIABLE_EVENTS = 10

_SAMPLERS = {
    "vector": sample_sinr_vector,
    "equivalent": sample_sinr_equivalent,
}


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    n_samples: int
    n_outage: int
    ci_half_width_95: float
    seed: int

    @property
    def flagged(self) -> bool:
        """True when the CI rests on too few outage events to be trusted."""
        return self.n_outage < MIN_RELIABLE_EVENTS

    def sigma(self, p: float | None = None) -> float:
        """Binomial standard deviation at ``p`` (default: the estimate itself)."""
        p = self.p_hat if p is None else p
        return math.sqrt(p * (1.0 - p) / self.n_samples)


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _chunks(n_samples: int, chunk_size: int):
    full, rest = divmod(n_samples, chunk_size)
    sizes = [chunk_size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _check_seed(seed: int) -> int:
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def estimate_outage(
    cfg: SystemConfig,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    sampler: str = "vector",
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> McEstimate:
    """Fraction of samples with end-to-end SINR below ``cfg.gamma_th``."""
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}, got {n_samples}")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    seed = _check_seed(seed)
    try:
        draw = _SAMPLERS[sampler]
    except KeyError:
        raise ValueError(f"unknown sampler {sampler!r}; use one of {sorted(_SAMPLERS)}") from None

    def count(item):
        i, size = item
        sinr = draw(cfg, chunk_rng(seed, i), size)
        return int(np.count_nonzero(sinr < cfg.gamma_th))

    n_out = sum(_map(count, _chunks(n_samples, chunk_size), workers))
    p = n_out / n_samples
    half = 1.96 * math.sqrt(p * (1.0 - p) / n_samples)
    return McEstimate(p, n_samples, n_out, half, seed)


def empirical_cdf(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    xs: Sequence[float],
    n_samples: int,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
) -> list[float]:
    """Empirical Pr(U <= x) at each x, from one pass of ``n_samples`` draws.

    ``sampler(rng, size)`` must return ``size`` draws of U.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("xs must be a non-empty 1-D sequence")
    if np.any(np.diff(xs) < 0):
        raise ValueError("xs must be sorted ascending")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seed = _check_seed(seed)
    counts = np.zeros(xs.size, dtype=np.int64)
    for i, size in _chunks(n_samples, chunk_size):
        u = np.sort(np.asarray(sampler(chunk_rng(seed, i), size), dtype=float))
        counts += np.searchsorted(u, xs, side="right")
    return (counts / n_samples).tolist()


def diversity_slope(points: Sequence[tuple[float, float]]) -> float:
    """Negative least-squares slope of log10(outage) against log10(rho1)."""
    if len(points) < 2:
        raise ValueError("need at least two (rho1, outage) points")
    rho = np.array([p[0] for p in points], dtype=float)
    out = np.array([p[1] for p in points], dtype=float)
    if np.any(rho <= 0) or np.any(out <= 0):
        raise ValueError("rho1 and outage values must be > 0")
    if np.unique(rho).size != rho.size:
        raise ValueError("rho1 values must be distinct")
    x = np.log10(rho)
    y = np.log10(out)
    xc = x - x.mean()
    return float(-(xc @ (y - y.mean())) / (xc @ xc))
