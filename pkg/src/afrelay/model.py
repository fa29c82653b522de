"""System configuration, channel generation and end-to-end SINR.

Normalization: noise power and all channel variances are 1, so the source,
relay and interferer powers equal rho1, rho2 and rho_i respectively.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from afrelay.specfun import MAX_ANTENNAS


class Topology(enum.Enum):
    N11 = "n11"        # N antennas at the source
    ONE_ONE_N = "11n"  # N antennas at the destination
    ONE_N_ONE = "1n1"  # N antennas at the relay


class Scheme(enum.Enum):
    FIXED = "fixed"
    VARIABLE = "variable"


@dataclass(frozen=True)
class SystemConfig:
    """Dual-hop AF system in normalized (rho) units.

    ``ici_at_relay`` selects the instantaneous-gain relay of the 1-N-1
    variable-gain system; it is forced to False for every other
    (topology, scheme) pair.
    """

    topology: Topology
    scheme: Scheme
    n_antennas: int
    rho1: float
    rho2: float
    rho_i: float
    gamma_th: float
    ici_at_relay: bool = False

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        n = self.n_antennas
        if int(n) != n or not 1 <= n <= MAX_ANTENNAS:
            raise ValueError(f"n_antennas must be an integer in [1, {MAX_ANTENNAS}], got {n!r}")
        object.__setattr__(self, "n_antennas", int(n))
        for name in ("rho1", "rho2", "gamma_th"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be finite and > 0, got {val!r}")
        if not (math.isfinite(self.rho_i) and self.rho_i >= 0):
            raise ValueError(f"rho_i must be finite and >= 0, got {self.rho_i!r}")
        if not (self.topology is Topology.ONE_N_ONE and self.scheme is Scheme.VARIABLE):
            object.__setattr__(self, "ici_at_relay", False)
        else:
            object.__setattr__(self, "ici_at_relay", bool(self.ici_at_relay))

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    @property
    def label(self) -> str:
        ici = "-ici" if self.ici_at_relay else ""
        return f"{self.topology.value}/{self.scheme.value}{ici}/N={self.n_antennas}"


@dataclass(frozen=True)
class AsymptoticQuery:
    """High-SNR operating point: rho2 = mu * rho1."""

    mu: float
    rho1: float

    def __post_init__(self):
        for name in ("mu", "rho1"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be finite and > 0, got {val!r}")

    @property
    def rho2(self) -> float:
        return self.mu * self.rho1


@dataclass(frozen=True)
class ChannelDraw:
    """A batch of channel realizations, leading axis = sample.

    Shapes (n, N) for multi-antenna links and (n, 1) for scalar links.
    """

    h1: np.ndarray
    h2: np.ndarray
    h_i: np.ndarray


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    # unit-variance circular complex Gaussian
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def draw_channels(cfg: SystemConfig, rng: np.random.Generator, size: int) -> ChannelDraw:
    n = cfg.n_antennas
    dims = {
        Topology.N11: (n, 1, 1),
        Topology.ONE_ONE_N: (1, n, 1),
        Topology.ONE_N_ONE: (n, n, n),
    }[cfg.topology]
    return ChannelDraw(
        h1=_cn(rng, (size, dims[0])),
        h2=_cn(rng, (size, dims[1])),
        h_i=_cn(rng, (size, dims[2])),
    )


def _norm2(h: np.ndarray) -> np.ndarray:
    return np.sum(h.real**2 + h.imag**2, axis=-1)


def fixed_gain_denominator(cfg: SystemConfig) -> float:
    """C such that the fixed relay gain is w^2 = rho2 / C."""
    n, r1, ri = cfg.n_antennas, cfg.rho1, cfg.rho_i
    if cfg.topology is Topology.N11:
        return n * r1 + ri + 1.0
    if cfg.topology is Topology.ONE_ONE_N:
        return r1 + ri + 1.0
    if cfg.scheme is Scheme.FIXED:
        return n * r1 + n * ri + 1.0
    # 1-N-1 variable gain without ICI uses an average-power constant gain
    return n * r1 + ri + 1.0


def sinr_from_draw(cfg: SystemConfig, draw: ChannelDraw) -> np.ndarray:
    """End-to-end SINR of every realization in ``draw``."""
    r1, r2, ri = cfg.rho1, cfg.rho2, cfg.rho_i
    h1, h2, hi = draw.h1, draw.h2, draw.h_i

    if cfg.topology is Topology.N11:
        # matched transmit beamformer w_t = h1^H / |h1|
        norm_h1 = np.sqrt(_norm2(h1))
        w_t = np.conj(h1) / norm_h1[:, None]
        sig = np.abs(np.sum(h1 * w_t, axis=-1)) ** 2
        g2 = _norm2(h2)
        gi = _norm2(hi)
        if cfg.scheme is Scheme.FIXED:
            w2 = r2 / fixed_gain_denominator(cfg)
        else:
            w2 = r2 / (_norm2(h1) * r1 + gi * ri + 1.0)
        return w2 * g2 * sig * r1 / (w2 * g2 * gi * ri + w2 * g2 + 1.0)

    if cfg.topology is Topology.ONE_ONE_N:
        # MRC at the destination: combiner c = h2 / |h2|
        g1 = _norm2(h1)
        gi = _norm2(hi)
        c = h2 / np.sqrt(_norm2(h2))[:, None]
        gain = np.abs(np.sum(np.conj(c) * h2, axis=-1)) ** 2  # = |h2|^2
        if cfg.scheme is Scheme.FIXED:
            w2 = r2 / fixed_gain_denominator(cfg)
        else:
            w2 = r2 / (g1 * r1 + gi * ri + 1.0)
        return w2 * gain * g1 * r1 / (w2 * gain * gi * ri + w2 * gain + 1.0)

    # 1-N-1: relay matrix W, received through the row h2
    n = cfg.n_antennas
    size = h1.shape[0]
    if cfg.scheme is Scheme.FIXED:
        w = math.sqrt(r2 / fixed_gain_denominator(cfg))
        mat = np.broadcast_to(w * np.eye(n, dtype=complex), (size, n, n))
    else:
        n1 = np.sqrt(_norm2(h1))
        n2 = np.sqrt(_norm2(h2))
        if cfg.ici_at_relay:
            proj_i = np.abs(np.sum(np.conj(h1) * hi, axis=-1)) ** 2 / n1**2
            w2 = r2 / (n1**2 * r1 + proj_i * ri + 1.0)
        else:
            w2 = np.full(size, r2 / fixed_gain_denominator(cfg))
        # MRC/MRT: W = w h2^* h1^H / (|h2||h1|)
        mat = (np.sqrt(w2) / (n1 * n2))[:, None, None] * (
            np.conj(h2)[:, :, None] * np.conj(h1)[:, None, :]
        )
    h2w = np.einsum("si,sij->sj", h2, mat)
    sig = np.abs(np.sum(h2w * h1, axis=-1)) ** 2
    intf = np.abs(np.sum(h2w * hi, axis=-1)) ** 2
    noise = _norm2(h2w)
    return sig * r1 / (intf * ri + noise + 1.0)


def _gains(cfg: SystemConfig, rng: np.random.Generator, size: int):
    """Scalar gains (y1, y2, y3) with the laws of the equivalent SINR forms."""
    n = cfg.n_antennas
    top = cfg.topology
    if top is Topology.N11:
        shapes = (n, 1, 1)
    elif top is Topology.ONE_ONE_N:
        shapes = (1, n, 1)
    elif cfg.scheme is Scheme.FIXED:
        # y1 = |h2 h1|^2/|h2|^2, y2 = |h2 hI|^2/|h2|^2, y3 = |h2|^2
        shapes = (1, 1, n)
    else:
        # y1 = |h1|^2, y2 = |h2|^2, y3 = |h1^H hI|^2/|h1|^2
        shapes = (n, n, 1)
    return tuple(rng.gamma(k, 1.0, size) for k in shapes)


def equivalent_sinr(cfg: SystemConfig, y1, y2, y3) -> np.ndarray:
    """Scalar SINR forms that are statistically equivalent to the vector model.

    Gains follow the laws produced by :func:`_gains` (Gamma(N) for squared
    norms of N-vectors, Exp(1) for projections and scalar links).
    """
    r1, r2, ri = cfg.rho1, cfg.rho2, cfg.rho_i
    y1, y2, y3 = (np.asarray(y, dtype=float) for y in (y1, y2, y3))
    if cfg.topology is Topology.ONE_N_ONE and cfg.scheme is Scheme.FIXED:
        c = fixed_gain_denominator(cfg)
        return r1 * y1 / (ri * y2 + 1.0 + c / (r2 * y3))
    if cfg.topology is Topology.ONE_N_ONE and cfg.scheme is Scheme.VARIABLE and not cfg.ici_at_relay:
        c = fixed_gain_denominator(cfg)
        return y1 * r1 * y2 * r2 / (y2 * r2 * (y3 * ri + 1.0) + c)
    if cfg.scheme is Scheme.FIXED:
        c = fixed_gain_denominator(cfg)
        return y1 * y2 * r1 * r2 / ((y3 * ri + 1.0) * y2 * r2 + c)
    return y1 * r1 * y2 * r2 / ((y3 * ri + 1.0) * (y2 * r2 + 1.0) + y1 * r1)


def gains_from_draw(cfg: SystemConfig, draw: ChannelDraw):
    """The (y1, y2, y3) that a channel draw maps to in :func:`equivalent_sinr`."""
    h1, h2, hi = draw.h1, draw.h2, draw.h_i
    if cfg.topology is Topology.ONE_N_ONE and cfg.scheme is Scheme.FIXED:
        g2 = _norm2(h2)
        y1 = np.abs(np.sum(h2 * h1, axis=-1)) ** 2 / g2
        y2 = np.abs(np.sum(h2 * hi, axis=-1)) ** 2 / g2
        return y1, y2, g2
    if cfg.topology is Topology.ONE_N_ONE:
        g1 = _norm2(h1)
        y3 = np.abs(np.sum(np.conj(h1) * hi, axis=-1)) ** 2 / g1
        return g1, _norm2(h2), y3
    return _norm2(h1), _norm2(h2), _norm2(hi)


def sample_sinr_vector(cfg: SystemConfig, rng: np.random.Generator, size: int | None = None):
    """End-to-end SINR from full vector channels; a float if ``size`` is None."""
    draw = draw_channels(cfg, rng, 1 if size is None else size)
    out = sinr_from_draw(cfg, draw)
    return float(out[0]) if size is None else out


def sample_sinr_equivalent(cfg: SystemConfig, rng: np.random.Generator, size: int | None = None):
    """End-to-end SINR from the scalar equivalent form; a float if ``size`` is None."""
    y1, y2, y3 = _gains(cfg, rng, 1 if size is None else size)
    out = equivalent_sinr(cfg, y1, y2, y3)
    return float(out[0]) if size is None else out
