import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from afpulse.link_sim import Modulation
from afpulse.metrics import (
    NO_FILTER,
    BerEstimate,
    SweepResult,
    ber,
    ber_bpsk_awgn,
    ber_from_counts,
    ber_qam16_awgn,
    method_label,
    papr_db,
    papr_diff_percent,
    papr_table,
    q_function,
    relative_rms_error,
    sweep_ber_vs_ebn0,
    sweep_ber_vs_jitter,
    sweep_rms_vs_order,
    sweep_rms_vs_rolloff,
    wilson_interval,
)
from afpulse.pulse_filters import PulseKind


def test_relative_rms_error():
    s = np.array([1.0, -1.0, 1.0, -1.0])
    assert relative_rms_error(s, s) == 0.0
    assert relative_rms_error(1.1 * s, s) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        relative_rms_error(s, np.zeros(4))
    with pytest.raises(ValueError):
        relative_rms_error(s, s[:3])


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_relative_rms_error_scale_invariant(c, seed):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal(32) + 0.1
    y = s + 0.01 * rng.standard_normal(32)
    assert relative_rms_error(c * y, c * s) == pytest.approx(relative_rms_error(y, s), rel=1e-9)


def test_wilson_interval_known_values():
    lo, hi = wilson_interval(0, 100, z=3.0)
    assert lo == 0.0 and hi == pytest.approx(9 / 109)
    lo, hi = wilson_interval(50, 100, z=1.96)
    assert (lo + hi) / 2 == pytest.approx(0.5)
    assert hi - lo == pytest.approx(2 * 1.96 / (1 + 1.96 ** 2 / 100) * math.sqrt(0.0025 + 1.96 ** 2 / 40000))
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10**6), st.floats(0, 1))
def test_wilson_interval_contains_estimate_and_shrinks(n, frac):
    k = int(frac * n)
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0
    lo4, hi4 = wilson_interval(4 * k, 4 * n)
    assert hi4 - lo4 <= hi - lo + 1e-15


def test_ber_estimate_and_format():
    est = ber(np.array([0, 1, 1, 0]), np.array([0, 1, 0, 0]))
    assert est.errors == 1 and est.bits == 4 and est.rate == 0.25
    assert est.format() == "0.25"
    zero = ber_from_counts(0, 1000)
    assert zero.format() == "<0.001"
    assert zero.halfwidth > 0
    assert BerEstimate(10, 1000).std_error() == pytest.approx(math.sqrt(0.01 * 0.99 / 1000))
    with pytest.raises(ValueError):
        ber(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        ber_from_counts(0, 0)


def test_papr():
    assert papr_db(np.ones(10)) == pytest.approx(0.0)
    x = np.zeros(100)
    x[0] = 1.0
    assert papr_db(x) == pytest.approx(20.0)
    assert papr_db(np.exp(1j * np.linspace(0, 6, 50))) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        papr_db(np.zeros(5))
    with pytest.raises(ValueError):
        papr_db(np.array([]))


@pytest.mark.parametrize("conv,af,diff", [
    (6.0816, 6.1027, 0.49), (6.0574, 5.9969, 1.38), (5.9692, 5.8724, 2.20),
    (5.1375, 4.9037, 5.24), (5.2387, 5.0462, 4.34), (5.4318, 5.3104, 2.76)])
def test_published_papr_differences_follow_from_their_db_values(conv, af, diff):
    assert round(papr_diff_percent(conv, af), 2) == diff


def test_closed_form_ber():
    assert float(q_function(0.0)) == 0.5
    assert float(ber_bpsk_awgn(0.0)) == pytest.approx(0.0786496035, rel=1e-8)
    assert float(ber_bpsk_awgn(10.0)) == pytest.approx(3.872108215e-6, rel=1e-8)
    # high-SNR limit of Gray 16-QAM: (3/8) erfc(sqrt(0.4 Eb/N0))
    ebn0 = 10 ** 1.4
    approx = 0.375 * math.erfc(math.sqrt(0.4 * ebn0))
    assert float(ber_qam16_awgn(14.0)) == pytest.approx(approx, rel=1e-6)
    grid = np.arange(0, 15)
    assert np.all(np.diff(ber_qam16_awgn(grid)) < 0)


def test_qam16_theory_matches_symbol_level_count():
    """Per-bit BER integrated over the 4-PAM Gray decision regions of one dimension."""
    ebn0 = 10 ** 0.6
    sigma = math.sqrt(1 / (4 * ebn0) / 2) * math.sqrt(10)
    levels = np.array([-3, -1, 1, 3])
    bits = {-3: (0, 0), -1: (0, 1), 1: (1, 1), 3: (1, 0)}
    edges = [-np.inf, -2, 0, 2, np.inf]
    total = 0.0
    for a in levels:
        for j, b in enumerate(levels):
            pdf = lambda v: math.exp(-(v - a) ** 2 / (2 * sigma ** 2)) / (sigma * math.sqrt(2 * math.pi))  # noqa: E731
            prob = quad(pdf, edges[j], edges[j + 1])[0]
            total += prob * sum(x != y for x, y in zip(bits[a], bits[b]))
    assert float(ber_qam16_awgn(6.0)) == pytest.approx(total / (4 * 2), rel=1e-7)


def test_sweep_result_table():
    r = SweepResult("x", [1, 2])
    r.add("a", 0.1, 0.01)
    r.add("a", 0.2, 0.02)
    r.add("b", 1.0, text="one")
    r.add("b", 2.0, text="two")
    header, rows = r.table()
    assert header == ["x", "a", "b", "a_hw"]
    assert rows == [[1, 0.1, "one", 0.01], [2, 0.2, "two", 0.02]]


def test_method_labels():
    assert method_label(PulseKind.SRRC, False) == "SRRC"
    assert method_label("BTRC", True) == "AF-BTRC"
    assert NO_FILTER == "no-filter"


def test_rms_sweeps_show_exact_af_and_positive_conventional():
    r = sweep_rms_vs_order(orders=(8, 16), K=63, n_blocks=1)
    assert r.axis == [8, 16]
    for label in ("AF-SRRC", "AF-BTRC"):
        assert max(r.series[label]) <= 1e-8
    for label in ("SRRC", "BTRC"):
        assert min(r.series[label]) > 0
    r = sweep_rms_vs_rolloff(rolloffs=(0.25, 1.0), K=63, n_blocks=1, families=(PulseKind.BTRC,))
    assert list(r.series) == ["BTRC", "AF-BTRC"]


def test_ber_sweeps_have_expected_columns():
    r = sweep_ber_vs_jitter(jitters=(0.0, 0.2), K=63, n_bits=4096, families=(PulseKind.SRRC,))
    header, rows = r.table()
    assert header == ["jitter", "SRRC", "AF-SRRC", "SRRC_hw", "AF-SRRC_hw"]
    assert len(rows) == 2
    r = sweep_ber_vs_ebn0(ebn0s=(2,), betas=(0.5,), K=63, n_bits=4096, modulation=Modulation.QAM16,
                          families=(PulseKind.SRRC,))
    header, _ = r.table()
    assert header[:5] == ["ebn0_db", "theory", NO_FILTER, "SRRC@0.5", "AF-SRRC@0.5"]
    assert r.series["theory"][0] == pytest.approx(float(ber_qam16_awgn(2.0)))


def test_papr_table_rows():
    r = papr_table(betas=(0.05, 0.15), K=127, n_symbols=2048)
    header, rows = r.table()
    assert header == ["config", "family", "beta", "conventional_db", "af_db", "diff_percent"]
    assert [row[0] for row in rows] == ["SRRC@0.05", "SRRC@0.15", "BTRC@0.05", "BTRC@0.15"]
    for row in rows:
        assert row[5] == pytest.approx(papr_diff_percent(row[3], row[4]))
