"""Evaluation quantities and the parameter sweeps built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .af_core import AfPrecoder
from .link_sim import ChannelConfig, LinkFilters, Modulation, run_link, simulate_ber
from .pulse_filters import PulseKind, PulseShape, design

__all__ = [
    "relative_rms_error",
    "BerEstimate",
    "ber",
    "ber_from_counts",
    "wilson_interval",
    "papr_db",
    "papr_diff_percent",
    "q_function",
    "ber_bpsk_awgn",
    "ber_qam16_awgn",
    "SweepResult",
    "method_label",
    "sweep_rms_vs_order",
    "sweep_rms_vs_rolloff",
    "sweep_ber_vs_jitter",
    "sweep_ber_vs_ebn0",
    "papr_table",
]

NO_FILTER = "no-filter"


def relative_rms_error(y, s) -> float:
    """``100 * ||y - s|| / ||s||`` in percent."""
    y, s = np.asarray(y), np.asarray(s)
    if y.shape != s.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {s.shape}")
    norm = np.linalg.norm(s)
    if norm == 0.0:
        raise ValueError("reference symbols have zero norm")
    return float(100.0 * np.linalg.norm(y - s) / norm)


def wilson_interval(errors: int, n: int, z: float = 3.0) -> tuple[float, float]:
    """Wilson score interval for a binomial rate."""
    if n <= 0:
        raise ValueError("need at least one trial")
    p = errors / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    # round-off can push the bounds past p at k = 0 or k = n
    return min(p, max(0.0, center - half)), max(p, min(1.0, center + half))


@dataclass(frozen=True)
class BerEstimate:
    errors: int
    bits: int
    z: float = 3.0

    @property
    def rate(self) -> float:
        return self.errors / self.bits

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.bits, self.z)

    @property
    def halfwidth(self) -> float:
        lo, hi = self.interval
        return (hi - lo) / 2

    def std_error(self, p: float | None = None) -> float:
        """Binomial standard error at ``p`` (default: the estimate)."""
        p = self.rate if p is None else p
        return math.sqrt(p * (1 - p) / self.bits)

    def format(self) -> str:
        """Rate as text; a zero count is reported as ``<1/N``."""
        if self.errors == 0:
            return f"<{1.0 / self.bits:.12g}"
        return f"{self.rate:.12g}"


def ber_from_counts(errors: int, bits: int, z: float = 3.0) -> BerEstimate:
    if bits <= 0:
        raise ValueError("BER needs at least one bit")
    return BerEstimate(int(errors), int(bits), z)


def ber(detected, sent, z: float = 3.0) -> BerEstimate:
    detected, sent = np.asarray(detected), np.asarray(sent)
    if detected.shape != sent.shape:
        raise ValueError(f"shape mismatch: {detected.shape} vs {sent.shape}")
    if sent.size == 0:
        raise ValueError("BER of an empty bit stream is undefined")
    return ber_from_counts(int(np.count_nonzero(detected != sent)), sent.size, z)


def papr_db(x) -> float:
    """Peak-to-average power ratio of a waveform, in dB."""
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("empty waveform")
    power = np.abs(x) ** 2
    mean = power.mean()
    if mean == 0.0:
        raise ValueError("zero-power waveform")
    return float(10.0 * np.log10(power.max() / mean))


def papr_diff_percent(reference_db: float, other_db: float) -> float:
    """Relative difference of two PAPRs on the linear power-ratio scale, percent."""
    ref = 10.0 ** (reference_db / 10.0)
    return float(100.0 * abs(10.0 ** (other_db / 10.0) - ref) / ref)


def q_function(x):
    return 0.5 * erfc(np.asarray(x) / math.sqrt(2.0))


def ber_bpsk_awgn(ebn0_db):
    ebn0 = 10.0 ** (np.asarray(ebn0_db) / 10.0)
    return q_function(np.sqrt(2.0 * ebn0))


def ber_qam16_awgn(ebn0_db):
    """Exact bit error rate of Gray-mapped square 16-QAM."""
    ebn0 = 10.0 ** (np.asarray(ebn0_db) / 10.0)
    a = np.sqrt(0.8 * ebn0)
    return (3 * q_function(a) + 2 * q_function(3 * a) - q_function(5 * a)) / 4


@dataclass
class SweepResult:
    """One metric per method per axis point, plus optional confidence half-widths."""

    axis_name: str
    axis: list
    series: dict[str, list] = field(default_factory=dict)
    halfwidths: dict[str, list] = field(default_factory=dict)
    trials: dict[str, list] = field(default_factory=dict)
    labels: dict[str, list] = field(default_factory=dict)

    def add(self, label: str, value, halfwidth=None, trials=None, text=None):
        self.series.setdefault(label, []).append(value)
        if halfwidth is not None:
            self.halfwidths.setdefault(label, []).append(halfwidth)
        if trials is not None:
            self.trials.setdefault(label, []).append(trials)
        if text is not None:
            self.labels.setdefault(label, []).append(text)

    def table(self) -> tuple[list[str], list[list]]:
        """Header and rows: axis, one column per series, then ``<label>_hw`` columns."""
        header = [self.axis_name] + list(self.series) + [f"{k}_hw" for k in self.halfwidths]
        rows = []
        for i, a in enumerate(self.axis):
            row = [a]
            for k, v in self.series.items():
                row.append(self.labels[k][i] if k in self.labels else v[i])
            row += [self.halfwidths[k][i] for k in self.halfwidths]
            rows.append(row)
        return header, rows


def method_label(kind: PulseKind | str, af: bool) -> str:
    kind = PulseKind(kind).value
    return f"AF-{kind}" if af else kind


def _filters(kind, beta, order, mu) -> LinkFilters:
    return LinkFilters.matched(design(PulseShape(kind, beta), order, mu))


def _rms_point(result, filters, K, seed, n_blocks, families_kind):
    cfg = ChannelConfig(noiseless=True, seed=seed)
    for af in (False, True):
        run = run_link(cfg, filters, K, af, Modulation.BPSK, n_blocks)
        result.add(method_label(families_kind, af), relative_rms_error(run.rx, run.symbols))


def sweep_rms_vs_order(orders=range(8, 41, 4), beta=0.05, mu=4, K=255,
                       families=(PulseKind.SRRC, PulseKind.BTRC), seed=0, n_blocks=4) -> SweepResult:
    """Noiseless relative RMS error of conventional and AF links versus filter order."""
    result = SweepResult("M", list(orders))
    for order in orders:
        for kind in families:
            _rms_point(result, _filters(kind, beta, order, mu), K, seed, n_blocks, kind)
    return result


def sweep_rms_vs_rolloff(rolloffs=tuple(round(0.05 * i, 2) for i in range(1, 21)), order=24, mu=4,
                         K=255, families=(PulseKind.SRRC, PulseKind.BTRC), seed=0,
                         n_blocks=4) -> SweepResult:
    """Noiseless relative RMS error versus roll-off factor."""
    result = SweepResult("beta", list(rolloffs))
    for beta in rolloffs:
        for kind in families:
            _rms_point(result, _filters(kind, beta, order, mu), K, seed, n_blocks, kind)
    return result


def _ber_point(result, label, cfg, filters, K, af, modulation, n_bits, threads, precoder=None):
    count = simulate_ber(cfg, filters, K, af, modulation, n_bits, threads=threads, precoder=precoder)
    est = ber_from_counts(count.errors, count.bits)
    result.add(label, est.rate, est.halfwidth, est.bits, est.format())
    return est


def sweep_ber_vs_jitter(jitters=tuple(round(0.025 * i, 3) for i in range(-10, 11)), order=24,
                        beta=0.05, mu=4, K=1023, ebn0_db=15.0,
                        families=(PulseKind.SRRC, PulseKind.BTRC), n_bits=10**6, seed=0,
                        threads=1) -> SweepResult:
    """BPSK BER versus receiver timing offset (symbol periods)."""
    result = SweepResult("jitter", list(jitters))
    setups = []
    for kind in families:
        filters = _filters(kind, beta, order, mu)
        setups.append((kind, filters, AfPrecoder(filters.f, filters.g, K)))
    for jitter in jitters:
        cfg = ChannelConfig(ebn0_db=ebn0_db, jitter=jitter, seed=seed)
        for kind, filters, precoder in setups:
            for af in (False, True):
                _ber_point(result, method_label(kind, af), cfg, filters, K, af, Modulation.BPSK,
                           n_bits, threads, precoder)
    return result


def sweep_ber_vs_ebn0(ebn0s=(0, 2, 4, 6, 8, 10), order=24, betas=(0.05, 0.5, 1.0), mu=4, K=1023,
                      modulation=Modulation.BPSK, families=(PulseKind.SRRC, PulseKind.BTRC),
                      n_bits=10**6, seed=0, threads=1, conventional=True,
                      reference=True) -> SweepResult:
    """BER versus E_b/N_0 at zero jitter, one series per (method, roll-off).

    All series at one point share ``seed`` and so see identical bits; the
    filtered series also see identical noise samples.  ``theory`` is the
    closed-form AWGN rate of the unfiltered link.
    """
    modulation = Modulation(modulation)
    result = SweepResult("ebn0_db", list(ebn0s))
    setups = []
    for kind in families:
        for beta in betas:
            filters = _filters(kind, beta, order, mu)
            setups.append((kind, beta, filters, AfPrecoder(filters.f, filters.g, K)))
    theory = ber_bpsk_awgn if modulation is Modulation.BPSK else ber_qam16_awgn
    for ebn0 in ebn0s:
        cfg = ChannelConfig(ebn0_db=ebn0, seed=seed)
        result.add("theory", float(theory(ebn0)))
        if reference:
            _ber_point(result, NO_FILTER, cfg, None, K, False, modulation, n_bits, threads)
        for kind, beta, filters, precoder in setups:
            for af in ((False, True) if conventional else (True,)):
                _ber_point(result, f"{method_label(kind, af)}@{beta:g}", cfg, filters, K, af,
                           modulation, n_bits, threads, precoder)
    return result


def papr_table(betas=(0.05, 0.1, 0.15), order=24, mu=4, K=1023,
               families=(PulseKind.SRRC, PulseKind.BTRC), n_symbols=10**6, seed=0) -> SweepResult:
    """Transmit-waveform PAPR of conventional and AF links, one row per (family, beta).

    Each configuration pools at least ``n_symbols`` BPSK symbols; the
    conventional and AF runs share the same bits.
    """
    rows = [(PulseKind(kind), beta) for kind in families for beta in betas]
    result = SweepResult("config", [f"{kind.value}@{beta:g}" for kind, beta in rows])
    n_blocks = -(-n_symbols // (K + 1))
    cfg = ChannelConfig(noiseless=True, seed=seed)
    for kind, beta in rows:
        filters = _filters(kind, beta, order, mu)
        conv = papr_db(run_link(cfg, filters, K, False, Modulation.BPSK, n_blocks).tx)
        af = papr_db(run_link(cfg, filters, K, True, Modulation.BPSK, n_blocks).tx)
        result.add("family", kind.value)
        result.add("beta", beta)
        result.add("conventional_db", conv)
        result.add("af_db", af)
        result.add("diff_percent", papr_diff_percent(conv, af))
    return result
