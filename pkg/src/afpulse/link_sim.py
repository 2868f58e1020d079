"""Baseband link: modulation, AF precompensation, pulse shaping, AWGN, matched filtering.

One block of ``K + 1`` symbols occupies ``mu (K + 1)`` samples; both FIR
filters are centered and truncated at the block edges, so symbol ``k`` is
read back at sample ``mu * k``.  Noise is added to the transmit waveform
with per-real-dimension variance ``N0 / 2``; the unit-energy matched filter
leaves that variance unchanged at the decision point.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .af_core import AfPrecoder
from .pulse_filters import FirFilter, matched_of

__all__ = [
    "Modulation",
    "SymbolBlock",
    "ChannelConfig",
    "LinkFilters",
    "LinkRun",
    "BitCount",
    "modulate",
    "upsample",
    "downsample",
    "fir_filter",
    "noise_std",
    "awgn",
    "receive",
    "detect",
    "run_link",
    "simulate_ber",
]

_QAM_SCALE = 1.0 / math.sqrt(10.0)


class Modulation(str, enum.Enum):
    BPSK = "BPSK"
    QAM16 = "QAM16"

    @property
    def bits_per_symbol(self) -> int:
        return 1 if self is Modulation.BPSK else 4


@dataclass(frozen=True, eq=False)
class SymbolBlock:
    symbols: np.ndarray
    modulation: Modulation
    bits: np.ndarray


@dataclass(frozen=True)
class ChannelConfig:
    ebn0_db: float = math.inf
    jitter: float = 0.0
    seed: int = 0
    noiseless: bool = False

    def __post_init__(self):
        if abs(self.jitter) > 0.5:
            raise ValueError(f"|jitter| must be <= 0.5 symbol periods, got {self.jitter}")

    @property
    def has_noise(self) -> bool:
        return not self.noiseless and math.isfinite(self.ebn0_db)


class LinkFilters(NamedTuple):
    f: FirFilter
    g: FirFilter

    @classmethod
    def matched(cls, f: FirFilter) -> LinkFilters:
        return cls(f, matched_of(f))

    @property
    def upsampling(self) -> int:
        return self.f.upsampling


def _gray_pam4(b0, b1):
    return 2 * ((b0 << 1) | (b0 ^ b1)) - 3


def modulate(bits, modulation: Modulation | str) -> SymbolBlock:
    """Unit-average-energy symbols; 0 -> +1 for BPSK, Gray-mapped 4x4 grid for 16-QAM.

    ``bits`` may carry leading batch axes; the last axis is mapped.
    """
    modulation = Modulation(modulation)
    bits = np.asarray(bits).astype(np.int64)
    bps = modulation.bits_per_symbol
    if bits.shape[-1] % bps:
        raise ValueError(f"{bits.shape[-1]} bits is not a multiple of {bps} bits/symbol")
    if modulation is Modulation.BPSK:
        symbols = 1.0 - 2.0 * bits
    else:
        q = bits.reshape(bits.shape[:-1] + (-1, 4))
        re = _gray_pam4(q[..., 0], q[..., 1])
        im = _gray_pam4(q[..., 2], q[..., 3])
        symbols = (re + 1j * im) * _QAM_SCALE
    return SymbolBlock(symbols, modulation, bits)


def upsample(symbols, mu: int) -> np.ndarray:
    """Insert ``mu - 1`` zeros after each symbol (last axis)."""
    symbols = np.asarray(symbols)
    if mu < 1:
        raise ValueError(f"upsampling ratio must be >= 1, got {mu}")
    out = np.zeros(symbols.shape[:-1] + (symbols.shape[-1] * mu,), dtype=symbols.dtype)
    out[..., ::mu] = symbols
    return out


def downsample(x, mu: int, n_symbols: int | None = None) -> np.ndarray:
    out = np.asarray(x)[..., ::mu]
    return out if n_symbols is None else out[..., :n_symbols]


def fir_filter(w, h: FirFilter) -> np.ndarray:
    """Centered FIR with zero extension outside the waveform; output length equals input."""
    return kernels.fir_same(w, h.taps)


def noise_std(ebn0_db: float, modulation: Modulation | str) -> float:
    """Per-real-dimension noise standard deviation for unit symbol energy."""
    modulation = Modulation(modulation)
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    n0 = 1.0 / (modulation.bits_per_symbol * ebn0)
    return math.sqrt(n0 / 2.0)


def awgn(w, cfg: ChannelConfig, modulation: Modulation | str, rng: np.random.Generator | None = None):
    """Add white Gaussian noise at the configured E_b/N_0.

    BPSK gets real noise, 16-QAM circular complex noise.  Without ``rng`` the
    draw is seeded from ``cfg.seed``.
    """
    w = np.asarray(w)
    if not cfg.has_noise:
        return w
    modulation = Modulation(modulation)
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    sigma = noise_std(cfg.ebn0_db, modulation)
    if modulation is Modulation.BPSK:
        return w + sigma * rng.standard_normal(w.shape)
    noise = rng.standard_normal(w.shape + (2,))
    return w + sigma * (noise[..., 0] + 1j * noise[..., 1])


def receive(x, g_nominal: FirFilter, jitter: float, mu: int, n_symbols: int | None = None) -> np.ndarray:
    """Matched filter re-sampled ``jitter`` symbol periods late, read at ``l = mu*k``."""
    if abs(jitter) > 0.5:
        raise ValueError(f"|jitter| must be <= 0.5, got {jitter}")
    x = np.asarray(x)
    if n_symbols is None:
        n_symbols = x.shape[-1] // mu
    g = g_nominal.shifted(jitter)
    return kernels.decim_filter(x, g.taps, mu, n_symbols)


def detect(y, modulation: Modulation | str) -> np.ndarray:
    """Minimum-distance hard decisions mapped back to bits (last axis)."""
    modulation = Modulation(modulation)
    y = np.asarray(y)
    if modulation is Modulation.BPSK:
        return (y.real < 0).astype(np.int8)

    def pam4_bits(v):
        idx = np.clip(np.rint((v / _QAM_SCALE + 3.0) / 2.0), 0, 3).astype(np.int8)
        b0 = idx >> 1
        return b0, b0 ^ (idx & 1)

    i0, i1 = pam4_bits(y.real)
    q0, q1 = pam4_bits(y.imag)
    return np.stack([i0, i1, q0, q1], axis=-1).reshape(y.shape[:-1] + (-1,))


@dataclass(frozen=True, eq=False)
class LinkRun:
    """Record of one end-to-end simulation over ``n_blocks`` blocks of ``K + 1`` symbols."""

    config: ChannelConfig
    modulation: Modulation
    K: int
    af_enabled: bool
    bits: np.ndarray
    symbols: np.ndarray
    z: np.ndarray | None
    tx: np.ndarray
    rx: np.ndarray
    detected: np.ndarray
    symbol_period: float = 1.0

    @property
    def bit_errors(self) -> int:
        return int(np.count_nonzero(self.bits != self.detected))

    @property
    def delay(self) -> float:
        """Minimum AF latency: the whole block must be known before transmission."""
        return (self.K + 1) * self.symbol_period if self.af_enabled else 0.0


def _transmit_receive(symbols, filters, cfg, modulation, precoder, rng):
    """Shared chain body; returns (z, tx, rx)."""
    n_sym = symbols.shape[-1]
    z = precoder(symbols) if precoder is not None else None
    compensated = symbols if z is None else symbols + z
    if filters is None:
        tx = compensated
        rx = awgn(tx, cfg, modulation, rng)
        return z, tx, rx
    mu = filters.upsampling
    tx = kernels.interp_filter(compensated, filters.f.taps, mu)
    noisy = awgn(tx, cfg, modulation, rng)
    rx = receive(noisy, filters.g, cfg.jitter, mu, n_sym)
    return z, tx, rx


def run_link(cfg: ChannelConfig, filters: LinkFilters | None, K: int, af_enabled: bool,
             modulation: Modulation | str = Modulation.BPSK, n_blocks: int = 1,
             precoder: AfPrecoder | None = None) -> LinkRun:
    """Simulate ``n_blocks`` independent blocks through the full chain.

    ``filters=None`` is the unfiltered reference link (symbols plus noise).
    """
    modulation = Modulation(modulation)
    if filters is None and af_enabled:
        raise ValueError("AF precompensation needs a filter pair")
    if filters is not None and cfg.jitter and filters.g.shape is None:
        raise ValueError("jitter requires a designed matched filter")
    if af_enabled and precoder is None:
        precoder = AfPrecoder(filters.f, filters.g, K)
    rng = np.random.default_rng(cfg.seed)
    bits = rng.integers(0, 2, size=(n_blocks, (K + 1) * modulation.bits_per_symbol), dtype=np.int8)
    block = modulate(bits, modulation)
    z, tx, rx = _transmit_receive(block.symbols, filters, cfg, modulation,
                                  precoder if af_enabled else None, rng)
    period = 1.0
    if filters is not None and filters.f.shape is not None:
        period = filters.f.shape.symbol_period
    return LinkRun(cfg, modulation, K, af_enabled, bits, block.symbols, z, tx, rx,
                   detect(rx, modulation), period)


class BitCount(NamedTuple):
    errors: int
    bits: int


def simulate_ber(cfg: ChannelConfig, filters: LinkFilters | None, K: int, af_enabled: bool,
                 modulation: Modulation | str, n_bits: int, batch_blocks: int = 64,
                 threads: int = 1, precoder: AfPrecoder | None = None,
                 start_batch: int = 0) -> BitCount:
    """Monte Carlo bit-error count over at least ``n_bits`` bits.

    Batch ``i`` draws from ``default_rng([cfg.seed, i])``, so the total is
    independent of the thread count and runs sharing a seed see the same
    bits.  ``start_batch`` continues an earlier run without reusing draws.
    """
    modulation = Modulation(modulation)
    if af_enabled and precoder is None:
        precoder = AfPrecoder(filters.f, filters.g, K)
    bits_per_block = (K + 1) * modulation.bits_per_symbol
    n_batches = max(1, -(-n_bits // (bits_per_block * batch_blocks)))
    batches = range(start_batch, start_batch + n_batches)

    def one(batch):
        rng = np.random.default_rng([cfg.seed, batch])
        bits = rng.integers(0, 2, size=(batch_blocks, bits_per_block), dtype=np.int8)
        symbols = modulate(bits, modulation).symbols
        _, _, rx = _transmit_receive(symbols, filters, cfg, modulation,
                                     precoder if af_enabled else None, rng)
        return int(np.count_nonzero(detect(rx, modulation) != bits))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errors = sum(pool.map(one, batches))
    else:
        errors = sum(map(one, batches))
    return BitCount(errors, n_batches * batch_blocks * bits_per_block)
