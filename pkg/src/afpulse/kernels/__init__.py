"""Hot loops of the link simulator and the Trench corner recursion.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
NumPy implementations in ``_pykernels`` take over.  Set ``AFPULSE_PURE_PYTHON=1``
to force the fallback.

The wrappers accept 1-D or 2-D (batch, samples) arrays, real or complex.
Complex inputs are processed as independent real and imaginary parts.
"""

import os

import numpy as np

from . import _pykernels

__all__ = ["BACKEND", "interp_filter", "fir_same", "decim_filter", "trench_block", "backend_module"]

_impl = _pykernels
BACKEND = "python"
if os.environ.get("AFPULSE_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def backend_module(name=None):
    """Return the kernel module for ``name`` ('cython' or 'python'), default active."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _as_batch(a):
    a = np.asarray(a)
    squeeze = a.ndim == 1
    if squeeze:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError(f"expected a 1-D or 2-D array, got shape {a.shape}")
    return a, squeeze


def _apply(fn, a, *args):
    a, squeeze = _as_batch(a)
    if np.iscomplexobj(a):
        re = fn(np.ascontiguousarray(a.real, dtype=np.float64), *args)
        im = fn(np.ascontiguousarray(a.imag, dtype=np.float64), *args)
        out = re + 1j * im
    else:
        out = fn(np.ascontiguousarray(a, dtype=np.float64), *args)
    return out[0] if squeeze else out


def _taps(taps):
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    if taps.ndim != 1 or taps.shape[0] % 2 == 0:
        raise ValueError("taps must be a 1-D array of odd length M + 1")
    return taps


def interp_filter(sym, taps, mu, impl=None):
    """Zero-stuff ``sym`` by ``mu`` and filter with centered ``taps`` (length ``mu * K1``)."""
    return _apply((impl or _impl).interp_filter, sym, _taps(taps), int(mu))


def fir_same(x, taps, impl=None):
    """Centered, zero-extended FIR with output the same length as ``x``."""
    return _apply((impl or _impl).fir_same, x, _taps(taps))


def decim_filter(x, taps, mu, n_out, impl=None):
    """``fir_same(x, taps)[..., ::mu][..., :n_out]`` without computing discarded samples."""
    return _apply((impl or _impl).decim_filter, x, _taps(taps), int(mu), int(n_out))


def trench_block(x, col0, h, impl=None):
    """Block ``B[0:h, col0:col0+h]`` of a symmetric Toeplitz inverse with first column ``x``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return (impl or _impl).trench_block(x, int(col0), int(h))
