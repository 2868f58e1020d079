"""Nyquist transmit/matched FIR filter design (SRRC and BTRC).

Taps are indexed ``m = -M/2 ... M/2`` and sampled at ``t = (m/mu + offset) * Ts``.
Every designed filter is scaled to unit tap energy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PulseKind",
    "PulseShape",
    "FirFilter",
    "srrc_pulse",
    "btrc_pulse",
    "srrc_spectrum",
    "btrc_spectrum",
    "design",
    "design_srrc",
    "design_btrc",
    "delta_filter",
    "matched_of",
    "cascade_response",
]

# Points closer than this (in symbol periods) to a removable singularity
# are evaluated through the analytic limit.
_SINGULAR_EPS = 1e-9

_LN2 = np.log(2.0)


class PulseKind(str, enum.Enum):
    SRRC = "SRRC"
    BTRC = "BTRC"


@dataclass(frozen=True)
class PulseShape:
    kind: PulseKind
    rolloff: float
    symbol_period: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in (0, 1], got {self.rolloff}")
        if not self.symbol_period > 0.0:
            raise ValueError(f"symbol_period must be positive, got {self.symbol_period}")

    def pulse(self, t):
        """Continuous impulse response at times ``t`` (seconds), unnormalized."""
        t = np.asarray(t, dtype=float) / self.symbol_period
        if self.kind is PulseKind.SRRC:
            return srrc_pulse(t, self.rolloff)
        return btrc_pulse(t, self.rolloff)


@dataclass(frozen=True, eq=False)
class FirFilter:
    """One pulse-shaping filter of even order ``M`` at ``mu`` samples/symbol.

    ``shape`` is ``None`` for the ideal single-tap (delta) filter.
    """

    taps: np.ndarray
    order: int
    upsampling: int
    shape: PulseShape | None = None
    time_offset: float = 0.0

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float)
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        _check_order(self.order, self.upsampling)
        if taps.shape != (self.order + 1,):
            raise ValueError(f"expected {self.order + 1} taps, got shape {taps.shape}")

    @property
    def half(self) -> int:
        return self.order // 2

    @property
    def tau0(self) -> int:
        """Symbol-spaced sidelobe count ``M / mu``."""
        return self.order // self.upsampling

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1)

    def tap(self, m: int) -> float:
        """Tap ``f_m``; zero outside the support ``|m| <= M/2``."""
        if -self.half <= m <= self.half:
            return float(self.taps[m + self.half])
        return 0.0

    def energy(self) -> float:
        return float(np.dot(self.taps, self.taps))

    def shifted(self, time_offset: float) -> FirFilter:
        """Same design re-sampled at ``time_offset`` symbol periods."""
        if self.shape is None:
            if time_offset != 0.0:
                raise ValueError("a delta filter cannot be re-sampled at a time offset")
            return self
        return design(self.shape, self.order, self.upsampling, time_offset)

    def __repr__(self):
        kind = self.shape.kind.value if self.shape is not None else "delta"
        beta = f", beta={self.shape.rolloff:g}" if self.shape is not None else ""
        return (f"FirFilter({kind}, M={self.order}, mu={self.upsampling}{beta}, "
                f"offset={self.time_offset:g})")


def _check_order(order: int, upsampling: int) -> None:
    if upsampling < 1:
        raise ValueError(f"upsampling ratio must be >= 1, got {upsampling}")
    if order < 0 or order % 2:
        raise ValueError(f"filter order M must be even and non-negative, got {order}")
    if order % upsampling:
        raise ValueError(f"upsampling ratio {upsampling} must divide the order {order}")


def srrc_pulse(t, beta: float) -> np.ndarray:
    """Square-root raised-cosine impulse response, ``t`` in symbol periods."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    at_zero = np.abs(t) < _SINGULAR_EPS
    at_pole = np.abs(np.abs(t) - 1.0 / (4.0 * beta)) < _SINGULAR_EPS
    regular = ~(at_zero | at_pole)
    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - beta)) + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
    out[regular] = num / (np.pi * tr * (1 - (4 * beta * tr) ** 2))
    out[at_zero] = 1 - beta + 4 * beta / np.pi
    q = np.pi / (4 * beta)
    out[at_pole & ~at_zero] = beta / np.sqrt(2) * (
        (1 + 2 / np.pi) * np.sin(q) + (1 - 2 / np.pi) * np.cos(q))
    return out


def btrc_pulse(t, beta: float) -> np.ndarray:
    """"Better than raised cosine" Nyquist impulse response, ``t`` in symbol periods.

    The only removable singularity is the sinc factor at ``t = 0``, which
    ``np.sinc`` already resolves.
    """
    t = np.asarray(t, dtype=float)
    x = np.pi * beta * t
    bracket = (_LN2 ** 2 * (2 * np.cos(x) - 1) + 2 * x * _LN2 * np.sin(x)) / (_LN2 ** 2 + x * x)
    return np.sinc(t) * bracket


def srrc_spectrum(f, beta: float) -> np.ndarray:
    """Frequency response of :func:`srrc_pulse` (``f`` in units of 1/Ts)."""
    f = np.abs(np.asarray(f, dtype=float))
    lo, hi = (1 - beta) / 2, (1 + beta) / 2
    out = np.zeros_like(f)
    out[f <= lo] = 1.0
    band = (f > lo) & (f <= hi)
    out[band] = np.cos(np.pi / (2 * beta) * (f[band] - lo))
    return out


def btrc_spectrum(f, beta: float) -> np.ndarray:
    """Frequency response of :func:`btrc_pulse` (``f`` in units of 1/Ts)."""
    f = np.abs(np.asarray(f, dtype=float))
    nyq = 0.5
    a = _LN2 / (beta * nyq)
    lo, hi = nyq * (1 - beta), nyq * (1 + beta)
    out = np.zeros_like(f)
    out[f <= lo] = 1.0
    inner = (f > lo) & (f <= nyq)
    out[inner] = np.exp(a * (lo - f[inner]))
    outer = (f > nyq) & (f <= hi)
    out[outer] = 1 - np.exp(a * (f[outer] - hi))
    return out


def design(shape: PulseShape, order: int, upsampling: int, time_offset: float = 0.0) -> FirFilter:
    """Sample ``shape`` at ``m/mu + time_offset`` symbol periods, unit energy."""
    _check_order(order, upsampling)
    m = np.arange(-order // 2, order // 2 + 1)
    t = (m / upsampling + time_offset) * shape.symbol_period
    taps = shape.pulse(t)
    norm = np.sqrt(np.dot(taps, taps))
    if norm == 0.0:
        raise ValueError("designed filter has zero energy")
    return FirFilter(taps / norm, order, upsampling, shape, float(time_offset))


def design_srrc(shape: PulseShape, order: int, upsampling: int, time_offset: float = 0.0) -> FirFilter:
    if shape.kind is not PulseKind.SRRC:
        raise ValueError(f"design_srrc needs an SRRC shape, got {shape.kind.value}")
    return design(shape, order, upsampling, time_offset)


def design_btrc(shape: PulseShape, order: int, upsampling: int, time_offset: float = 0.0) -> FirFilter:
    if shape.kind is not PulseKind.BTRC:
        raise ValueError(f"design_btrc needs a BTRC shape, got {shape.kind.value}")
    return design(shape, order, upsampling, time_offset)


def delta_filter(upsampling: int = 1) -> FirFilter:
    """The single unit tap: no pulse shaping at all."""
    return FirFilter(np.ones(1), 0, upsampling)


def matched_of(f: FirFilter) -> FirFilter:
    """Time-reversed filter ``g_n = f_{-n}``."""
    if f.time_offset != 0.0:
        raise ValueError("matched filter is defined for nominal (zero-offset) taps only")
    return FirFilter(f.taps[::-1].copy(), f.order, f.upsampling, f.shape, 0.0)


def cascade_response(f: FirFilter, g: FirFilter) -> np.ndarray:
    """Full linear convolution ``f * g`` (length ``2M + 1``, centered at index M)."""
    if f.upsampling != g.upsampling:
        raise ValueError(f"upsampling mismatch: {f.upsampling} vs {g.upsampling}")
    if f.order != g.order:
        raise ValueError(f"filter orders must match (M = N), got {f.order} and {g.order}")
    return np.convolve(f.taps, g.taps)
