"""Pure NumPy reference kernels.

Semantics are shared with ``_ckernels.pyx``; every array argument is
float64 and 2-D arrays are ``(batch, samples)``.  Loops run over filter
taps and are vectorized over the batch and sample axes.
"""

import numpy as np


def interp_filter(sym, taps, mu):
    """Upsample by ``mu`` and apply the centered FIR ``taps``, truncated to ``mu*K1``."""
    nb, k1 = sym.shape
    n_taps = taps.shape[0]
    half = (n_taps - 1) // 2
    length = mu * k1
    out = np.zeros((nb, length))
    for i in range(n_taps):
        m = i - half
        # output l = mu*q + m must land in [0, length)
        q_lo = (-m + mu - 1) // mu if m < 0 else 0
        q_hi = min(k1 - 1, (length - 1 - m) // mu)
        if q_hi < q_lo:
            continue
        start = mu * q_lo + m
        stop = mu * q_hi + m + 1
        out[:, start:stop:mu] += taps[i] * sym[:, q_lo:q_hi + 1]
    return out


def fir_same(x, taps):
    """Centered FIR: ``y_l = sum_m x_{l-m} h_m`` with zero extension, same length."""
    nb, n = x.shape
    n_taps = taps.shape[0]
    half = (n_taps - 1) // 2
    out = np.zeros((nb, n))
    for i in range(n_taps):
        m = i - half
        if abs(m) >= n:
            continue
        if m >= 0:
            out[:, m:] += taps[i] * x[:, :n - m]
        else:
            out[:, :n + m] += taps[i] * x[:, -m:]
    return out


def decim_filter(x, taps, mu, n_out):
    """Centered FIR evaluated only at ``l = mu*k`` for ``k < n_out``."""
    nb, n = x.shape
    n_taps = taps.shape[0]
    half = (n_taps - 1) // 2
    out = np.zeros((nb, n_out))
    for i in range(n_taps):
        m = i - half
        # input index mu*k - m must land in [0, n)
        k_lo = max(0, (m + mu - 1) // mu)
        k_hi = min(n_out - 1, (n - 1 + m) // mu)
        if k_hi < k_lo:
            continue
        start = mu * k_lo - m
        stop = mu * k_hi - m + 1
        out[:, k_lo:k_hi + 1] += taps[i] * x[:, start:stop:mu]
    return out


def trench_block(x, col0, h):
    """Block ``B[0:h, col0:col0+h]`` of a symmetric Toeplitz inverse.

    ``x`` is the first column of the inverse.  Entries follow the Trench
    recursion ``B[i+1, j+1] = B[i, j] + (x[i+1] x[j+1] - x[n-1-i] x[n-1-j]) / x[0]``
    summed down each diagonal from the first row.
    """
    n = x.shape[0]
    x0 = x[0]
    out = np.empty((h, h))
    for i in range(h):
        for j in range(h):
            r, c = i, col0 + j
            if r > c:
                r, c = c, r
            d = c - r
            t = np.arange(r)
            acc = np.dot(x[t + 1], x[d + t + 1]) - np.dot(x[n - 1 - t], x[n - 1 - d - t])
            out[i, j] = x[d] + acc / x0
    return out
