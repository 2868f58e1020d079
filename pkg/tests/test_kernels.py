import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from afpulse import kernels

PY = kernels.backend_module("python")


def _cy():
    try:
        return kernels.backend_module("cython")
    except ImportError:
        pytest.skip("compiled kernels not built")


def _interp_oracle(sym, taps, mu):
    up = np.zeros(sym.shape[-1] * mu)
    up[::mu] = sym
    half = (taps.size - 1) // 2
    return np.convolve(up, taps)[half:half + up.size]


shapes = st.tuples(st.integers(1, 3), st.integers(1, 40), st.integers(0, 6), st.integers(1, 5))


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_kernels_agree_with_oracles(shape, seed):
    nb, k1, half, mu = shape
    rng = np.random.default_rng(seed)
    taps = rng.standard_normal(2 * half + 1)
    sym = rng.standard_normal((nb, k1))
    x = rng.standard_normal((nb, k1 * mu))
    for impl in (PY, _cy()):
        out = kernels.interp_filter(sym, taps, mu, impl=impl)
        for b in range(nb):
            np.testing.assert_allclose(out[b], _interp_oracle(sym[b], taps, mu), atol=1e-12)
        same = kernels.fir_same(x, taps, impl=impl)
        for b in range(nb):
            np.testing.assert_allclose(same[b], np.convolve(x[b], taps)[half:half + x.shape[1]],
                                       atol=1e-12)
        np.testing.assert_allclose(kernels.decim_filter(x, taps, mu, k1, impl=impl),
                                   same[:, ::mu][:, :k1], atol=1e-12)


def test_python_and_compiled_identical_on_complex_batches():
    rng = np.random.default_rng(0)
    taps = rng.standard_normal(25)
    sym = rng.standard_normal((4, 300)) + 1j * rng.standard_normal((4, 300))
    a = kernels.interp_filter(sym, taps, 4, impl=PY)
    b = kernels.interp_filter(sym, taps, 4, impl=_cy())
    np.testing.assert_allclose(a, b, atol=1e-13)
    np.testing.assert_allclose(kernels.decim_filter(a, taps, 4, 300, impl=PY),
                               kernels.decim_filter(a, taps, 4, 300, impl=_cy()), atol=1e-13)


def test_one_dimensional_inputs_keep_shape():
    taps = np.array([0.25, 0.5, 0.25])
    assert kernels.fir_same(np.ones(10), taps).shape == (10,)
    assert kernels.interp_filter(np.ones(5), taps, 2).shape == (10,)
    assert kernels.decim_filter(np.ones(10), taps, 2, 5).shape == (5,)


def test_even_tap_count_rejected():
    with pytest.raises(ValueError):
        kernels.fir_same(np.ones(10), np.ones(4))
    with pytest.raises(ValueError):
        kernels.fir_same(np.ones((2, 2, 2)), np.ones(3))


def test_trench_block_matches_dense_inverse():
    n, h = 40, 7
    col = np.zeros(n)
    col[:4] = [3.0, 0.8, -0.4, 0.1]
    T = scipy.linalg.toeplitz(col)
    Binv = np.linalg.inv(T)
    x = Binv[:, 0].copy()
    for impl in (PY, _cy()):
        np.testing.assert_allclose(kernels.trench_block(x, 0, h, impl=impl), Binv[:h, :h], atol=1e-13)
        np.testing.assert_allclose(kernels.trench_block(x, n - h, h, impl=impl), Binv[:h, n - h:],
                                   atol=1e-13)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")
