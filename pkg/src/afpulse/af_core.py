"""Auxiliary-factor (AF) computation for a paired transmit/matched filter.

For a block ``s`` of ``K + 1`` symbols the AF vector ``z`` satisfies
``A (s + z) = s``, where ``A`` maps the compensated block through
upsampling, the transmit filter, the matched filter and downsampling,
with the FIR windows truncated at the block edges.

Row ``k`` of ``A`` holds the coefficients::

    hat_a[k, p] = sum_{m = m_lo}^{m_hi} f[mu*p - m] * g[m],   a[k, k - p] = hat_a[k, p]

where ``m`` runs over matched-filter taps whose input sample ``mu*k - m``
exists inside the block.  Interior rows share one generator, so
``A = A_t - A_p`` with ``A_t`` banded Toeplitz and ``A_p`` nonzero only in
a head block ``c`` and a terminal block ``e``.

Two solvers are provided: :func:`solve_direct` (dense LU) and
:func:`solve_fast` (circulant-embedded ``A_t^{-1}`` plus a small boundary
system built from Trench-recursion corner blocks of ``A_t^{-1}``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from . import kernels
from .pulse_filters import FirFilter

__all__ = [
    "AfError",
    "SingularMatrix",
    "BlockTooShort",
    "NearSingularToeplitz",
    "SingularBoundarySystem",
    "SummationBounds",
    "summation_bounds",
    "compute_hat_a",
    "SystemMatrix",
    "build_system_matrix",
    "SolveMethod",
    "AfSolution",
    "solve_direct",
    "ToeplitzDecomposition",
    "decompose_toeplitz",
    "InverseBlocks",
    "trench_inverse_blocks",
    "solve_fast",
    "AfPrecoder",
]

# Relative pivot / eigenvalue magnitude below which a system counts as singular.
SINGULAR_RTOL = 1e-12


class AfError(ArithmeticError):
    """Numerical failure while computing auxiliary factors."""


class SingularMatrix(AfError):
    pass


class BlockTooShort(AfError):
    pass


class NearSingularToeplitz(AfError):
    def __init__(self, message, magnitude):
        super().__init__(message)
        self.magnitude = magnitude


class SingularBoundarySystem(AfError):
    pass


@dataclass(frozen=True)
class SummationBounds:
    p_lo: int
    p_hi: int
    m_lo: int
    m_hi: int
    tau0: int

    @property
    def is_empty(self) -> bool:
        return self.p_hi < self.p_lo or self.m_hi < self.m_lo


def summation_bounds(k: int, p: int, K: int, order: int, mu: int) -> SummationBounds:
    """Summation limits of the ``(k, p)`` term with ``tau0 = M / mu``."""
    tau0 = order // mu
    p_lo = max(-2 * tau0, k - K)
    p_hi = min(2 * tau0, k)
    m_lo = max(-mu * tau0, mu * (p - tau0), mu * (k - K - 1) + 1)
    m_hi = min(mu * tau0, mu * (p + tau0), mu * k)
    return SummationBounds(p_lo, p_hi, m_lo, m_hi, tau0)


def _check_pair(f: FirFilter, g: FirFilter) -> None:
    if f.upsampling != g.upsampling:
        raise ValueError(f"upsampling mismatch: {f.upsampling} vs {g.upsampling}")
    if f.order != g.order:
        raise ValueError(f"filter orders must match (M = N), got {f.order} and {g.order}")


def compute_hat_a(f: FirFilter, g: FirFilter, k: int, p: int, K: int) -> float:
    """Boundary-aware cascade coefficient of row ``k`` at symbol lag ``p``.

    Taps outside ``[-M/2, M/2]`` contribute zero.
    """
    _check_pair(f, g)
    if not 0 <= k <= K:
        raise ValueError(f"row k={k} outside [0, {K}]")
    mu, half = f.upsampling, f.half
    b = summation_bounds(k, p, K, f.order, mu)
    if not b.p_lo <= p <= b.p_hi:
        raise ValueError(f"lag p={p} outside [{b.p_lo}, {b.p_hi}] for row k={k}")
    lo = max(b.m_lo, -half, mu * p - half)
    hi = min(b.m_hi, half, mu * p + half)
    if hi < lo:
        return 0.0
    m = np.arange(lo, hi + 1)
    return float(np.dot(f.taps[mu * p - m + half], g.taps[m + half]))


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Banded storage of ``A``: ``hat_a[k, p + w] = a[k, k - p]`` with ``w = 2*tau0``."""

    hat_a: np.ndarray
    tau0: int
    generator: np.ndarray

    @property
    def size(self) -> int:
        return self.hat_a.shape[0]

    @property
    def K(self) -> int:
        return self.size - 1

    @property
    def band_halfwidth(self) -> int:
        return 2 * self.tau0

    def entry(self, k: int, kk: int) -> float:
        w = self.band_halfwidth
        p = k - kk
        if abs(p) > w:
            return 0.0
        return float(self.hat_a[k, p + w])

    def block(self, r0: int, r1: int, c0: int, c1: int) -> np.ndarray:
        """Dense sub-matrix ``A[r0:r1, c0:c1]``."""
        w = self.band_halfwidth
        out = np.zeros((r1 - r0, c1 - c0))
        for k in range(r0, r1):
            lo, hi = max(c0, k - w), min(c1, k + w + 1)
            if lo < hi:
                kk = np.arange(lo, hi)
                out[k - r0, lo - c0:hi - c0] = self.hat_a[k, k - kk + w]
        return out

    def dense(self) -> np.ndarray:
        return self.block(0, self.size, 0, self.size)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``A @ x`` along the last axis in ``O((K+1) tau0)``."""
        x = np.asarray(x)
        n, w = self.size, self.band_halfwidth
        out = np.zeros(x.shape, dtype=np.result_type(x, float))
        for p in range(-w, w + 1):
            lo, hi = max(0, p), min(n, n + p)
            if lo >= hi:
                continue
            out[..., lo:hi] += self.hat_a[lo:hi, p + w] * x[..., lo - p:hi - p]
        return out


def build_system_matrix(f: FirFilter, g: FirFilter, K: int) -> SystemMatrix:
    """Assemble ``A`` for blocks of ``K + 1`` symbols."""
    _check_pair(f, g)
    if K < 0:
        raise ValueError(f"K must be non-negative, got {K}")
    mu, M = f.upsampling, f.order
    tau0 = M // mu
    w = 2 * tau0
    n = K + 1

    cascade = np.convolve(f.taps, g.taps)
    generator = np.zeros(w + 1)
    for p in range(w + 1):
        if mu * p <= M:
            generator[p] = cascade[M + mu * p]
    # interior rows carry the full (untruncated) cascade autocorrelation
    template = np.zeros(2 * w + 1)
    for p in range(-w, w + 1):
        if abs(mu * p) <= M:
            template[p + w] = cascade[M + mu * p]

    hat_a = np.tile(template, (n, 1))
    edge_rows = sorted(set(range(min(w, n))) | set(range(max(0, n - w), n)))
    for k in edge_rows:
        b = summation_bounds(k, 0, K, M, mu)
        hat_a[k] = 0.0
        for p in range(b.p_lo, b.p_hi + 1):
            hat_a[k, p + w] = compute_hat_a(f, g, k, p, K)
    hat_a.setflags(write=False)
    generator.setflags(write=False)
    return SystemMatrix(hat_a, tau0, generator)


class SolveMethod(str, enum.Enum):
    DIRECT = "Direct"
    FAST_TOEPLITZ = "FastToeplitz"


@dataclass(frozen=True, eq=False)
class AfSolution:
    z: np.ndarray
    method: SolveMethod
    residual: float

    def power_gain_db(self, s: np.ndarray) -> float:
        """Energy of ``s + z`` relative to ``s`` (diagnostic only)."""
        s = np.asarray(s)
        return float(10 * np.log10(np.sum(np.abs(s + self.z) ** 2) / np.sum(np.abs(s) ** 2)))


def residual(A: SystemMatrix, s: np.ndarray, z: np.ndarray) -> float:
    """``max |A (s + z) - s|``."""
    if np.size(s) == 0:
        return 0.0
    return float(np.max(np.abs(A.matvec(np.asarray(s) + z) - s)))


def _split_complex(solve: Callable[[np.ndarray], np.ndarray], s: np.ndarray) -> np.ndarray:
    # A is real: real and imaginary parts are solved independently
    if np.iscomplexobj(s):
        return solve(np.ascontiguousarray(s.real)) + 1j * solve(np.ascontiguousarray(s.imag))
    return solve(np.asarray(s, dtype=float))


def _lu_checked(mat: np.ndarray, exc: type[AfError], what: str):
    lu, piv = scipy.linalg.lu_factor(mat, check_finite=False)
    scale = max(np.max(np.abs(mat)), 1.0) if mat.size else 1.0
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() <= SINGULAR_RTOL * scale:
        raise exc(f"{what} is singular (pivot {pivots.min():.3e}, scale {scale:.3e})")
    return lu, piv


def solve_direct(A: SystemMatrix, s: np.ndarray, lu=None) -> AfSolution:
    """``z = A^{-1} s - s`` by dense LU, ``O((K+1)^3)``.

    ``s`` may be ``(K+1,)`` or a batch ``(B, K+1)``.  A precomputed
    ``lu_factor`` result may be passed to skip factorization.
    """
    s = np.asarray(s)
    if s.shape[-1] != A.size:
        raise ValueError(f"block length {s.shape[-1]} does not match matrix size {A.size}")
    if lu is None:
        lu = _lu_checked(A.dense(), SingularMatrix, "system matrix A")
    z = _split_complex(lambda v: scipy.linalg.lu_solve(lu, v.T, check_finite=False).T, s) - s
    return AfSolution(z, SolveMethod.DIRECT, residual(A, s, z))


class InverseBlocks(NamedTuple):
    hh: np.ndarray
    ht: np.ndarray
    th: np.ndarray
    tt: np.ndarray
    apply_B: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ToeplitzDecomposition:
    """``A = A_t - A_p`` with the pieces needed by :func:`solve_fast`.

    ``A_t^{-1} = C^{-1} + C^{-1} E W E^T C^{-1}`` where ``C`` is the circulant
    that wraps the band of ``A_t`` and ``E`` selects the ``2w`` wrapped rows.
    """

    matrix: SystemMatrix
    generator: np.ndarray
    c_block: np.ndarray
    e_block: np.ndarray
    circulant_eigs: np.ndarray
    wrap_index: np.ndarray
    wrap_cols: np.ndarray
    wrap_core: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.size

    @property
    def head(self) -> int:
        """Side length ``2*tau0 + 1`` of the head and terminal blocks."""
        return self.c_block.shape[0]

    @property
    def boundary_index(self) -> np.ndarray:
        n, h = self.size, self.head
        return np.concatenate([np.arange(h), np.arange(n - h, n)])

    def toeplitz_dense(self) -> np.ndarray:
        col = np.zeros(self.size)
        col[:self.generator.size] = self.generator[:self.size]
        return scipy.linalg.toeplitz(col)

    def boundary_dense(self) -> np.ndarray:
        """Dense ``A_p`` (``c`` top-left, ``e`` bottom-right)."""
        n, h = self.size, self.head
        out = np.zeros((n, n))
        out[:h, :h] = self.c_block
        out[n - h:, n - h:] = self.e_block
        return out

    def apply_B(self, x: np.ndarray) -> np.ndarray:
        """``A_t^{-1} x`` along the last axis in ``O((K+1) log(K+1))``."""
        return _split_complex(self._apply_B_real, np.asarray(x))

    def _apply_B_real(self, x: np.ndarray) -> np.ndarray:
        n = self.size
        y = np.fft.irfft(np.fft.rfft(x, axis=-1) / self.circulant_eigs, n, axis=-1)
        if self.wrap_index.size:
            y = y + (y[..., self.wrap_index] @ self.wrap_core.T) @ self.wrap_cols.T
        return y

    @cached_property
    def inverse_blocks(self) -> InverseBlocks:
        return trench_inverse_blocks(self)

    @cached_property
    def boundary_columns(self) -> np.ndarray:
        """Columns of ``A_t^{-1}`` at the head and terminal indices, ``(K+1, 2h)``."""
        idx = self.boundary_index
        unit = np.zeros((idx.size, self.size))
        unit[np.arange(idx.size), idx] = 1.0
        return self.apply_B(unit).T

    @cached_property
    def boundary_scale(self) -> np.ndarray:
        """``blockdiag(c, e)``."""
        return scipy.linalg.block_diag(self.c_block, self.e_block)

    @cached_property
    def J(self) -> np.ndarray:
        """Boundary system ``I - blockdiag(c, e) [[B_hh, B_ht], [B_th, B_tt]]``.

        This is the left product of ``blockdiag(c, e)`` with
        ``blockdiag(c^{-1}, e^{-1}) - corners(B)``; it never inverts ``c`` or
        ``e``, which are rank-deficient whenever the boundary distortion
        is confined to fewer than ``2*tau0 + 1`` rows.
        """
        blk = self.inverse_blocks
        corners = np.block([[blk.hh, blk.ht], [blk.th, blk.tt]])
        return np.eye(corners.shape[0]) - self.boundary_scale @ corners

    @cached_property
    def _J_lu(self):
        return _lu_checked(self.J, SingularBoundarySystem, "boundary system J")


def decompose_toeplitz(A: SystemMatrix) -> ToeplitzDecomposition:
    """Split ``A`` into its banded Toeplitz part and boundary blocks."""
    n, w = A.size, A.band_halfwidth
    h = w + 1
    if n < 2 * h:
        raise BlockTooShort(f"K+1={n} < 2(2*tau0+1)={2 * h}; head and terminal blocks would overlap")

    generator = np.array(A.hat_a[w, w:])
    t_block = scipy.linalg.toeplitz(generator)
    # rows min(i, j) for c and max(i, j) for e, mirrored
    head = A.block(0, h, 0, h)
    c_block = t_block - np.triu(head) - np.triu(head, 1).T
    tail = A.block(n - h, n, n - h, n)
    e_block = t_block - np.tril(tail) - np.tril(tail, -1).T

    # everything outside the two blocks must already be Toeplitz
    outside = np.concatenate([A.hat_a[:h], A.hat_a[n - h:]])
    rows = np.concatenate([np.arange(h), np.arange(n - h, n)])
    lags = np.arange(-w, w + 1)
    cols = rows[:, None] - lags[None, :]
    in_block = ((rows[:, None] < h) & (cols < h)) | ((rows[:, None] >= n - h) & (cols >= n - h))
    valid = (cols >= 0) & (cols < n) & ~in_block
    expect = generator[np.abs(lags)][None, :].repeat(rows.size, 0)
    scale = max(np.max(np.abs(generator)), 1.0)
    if np.any(np.abs(outside - expect)[valid] > 1e-13 * scale):
        raise AfError("boundary distortion reaches outside the head/terminal blocks")

    col = np.zeros(n)
    col[:w + 1] = generator
    if w:
        col[n - w:] = generator[1:][::-1]
    eigs = np.fft.rfft(col).real
    mag = np.abs(eigs)
    if mag.min() <= SINGULAR_RTOL * mag.max():
        raise NearSingularToeplitz(
            f"circulant embedding of A_t has a near-zero Fourier value {mag.min():.3e}", float(mag.min()))

    wrap_index = np.concatenate([np.arange(w), np.arange(n - w, n)])
    # R = C - A_t restricted to the wrapped rows/columns
    diff = (wrap_index[:, None] - wrap_index[None, :]) % n
    circ = col[diff]
    lag = np.abs(wrap_index[:, None] - wrap_index[None, :])
    toep = np.where(lag <= w, generator[np.minimum(lag, w)], 0.0)
    wrap_corr = circ - toep
    cinv_col = np.fft.irfft(1.0 / eigs, n)
    # column j of C^{-1} is the first column rolled by j
    wrap_cols = cinv_col[(np.arange(n)[:, None] - wrap_index[None, :]) % n]
    wrap_core = wrap_corr
    if wrap_index.size:
        small = np.eye(wrap_index.size) - wrap_corr @ wrap_cols[wrap_index]
        lu, piv = scipy.linalg.lu_factor(small, check_finite=False)
        pivot = float(np.abs(np.diag(lu)).min())
        if pivot <= SINGULAR_RTOL:
            raise NearSingularToeplitz(f"Toeplitz part A_t is singular (pivot {pivot:.3e})", pivot)
        wrap_core = scipy.linalg.lu_solve((lu, piv), wrap_corr, check_finite=False)

    for arr in (generator, c_block, e_block, eigs, wrap_cols, wrap_core):
        arr.setflags(write=False)
    return ToeplitzDecomposition(A, generator, c_block, e_block, eigs, wrap_index, wrap_cols, wrap_core)


def trench_inverse_blocks(dec: ToeplitzDecomposition) -> InverseBlocks:
    """Corner blocks of ``B = A_t^{-1}`` and a fast ``B @ x`` operator.

    The first column of ``B`` comes from one fast apply; the corner entries
    then follow the Trench recursion in ``O(tau0^3)`` work.  Persymmetry of
    a symmetric Toeplitz inverse gives the terminal blocks.
    """
    n, h = dec.size, dec.head
    e0 = np.zeros(n)
    e0[0] = 1.0
    x = dec.apply_B(e0)
    hh = kernels.trench_block(x, 0, h)
    ht = kernels.trench_block(x, n - h, h)
    return InverseBlocks(hh, ht, ht.T.copy(), hh[::-1, ::-1].copy(), dec.apply_B)


def solve_fast(dec: ToeplitzDecomposition, s: np.ndarray) -> AfSolution:
    """``z`` from the Toeplitz decomposition.

    With ``w = s + z`` the relation ``w = B s + B [u; 0; v]`` and
    ``[u; v] = blockdiag(c, e) [w^h; w^t]`` give the boundary system
    ``J [u; v] = blockdiag(c, e) [(B s)^h; (B s)^t]``.
    """
    s = np.asarray(s)
    if s.shape[-1] != dec.size:
        raise ValueError(f"block length {s.shape[-1]} does not match matrix size {dec.size}")
    idx = dec.boundary_index
    lu = dec._J_lu
    scale = dec.boundary_scale
    cols = dec.boundary_columns

    def solve(v):
        y = dec._apply_B_real(v)
        rhs = y[..., idx] @ scale.T
        uv = scipy.linalg.lu_solve(lu, np.atleast_2d(rhs).T, check_finite=False).T
        return y + (uv @ cols.T).reshape(y.shape)

    z = _split_complex(solve, s) - s
    return AfSolution(z, SolveMethod.FAST_TOEPLITZ, residual(dec.matrix, s, z))


class AfPrecoder:
    """AF computation for fixed filters and block length, reusing factorizations.

    Falls back to the direct solver when the block is too short for the
    Toeplitz decomposition.
    """

    def __init__(self, f: FirFilter, g: FirFilter, K: int, method: str = "auto"):
        self.f, self.g, self.K = f, g, K
        self.matrix = build_system_matrix(f, g, K)
        self.decomposition = None
        self._lu = None
        if method not in ("auto", "fast", "direct"):
            raise ValueError(f"unknown solve method {method!r}")
        if method != "direct":
            try:
                self.decomposition = decompose_toeplitz(self.matrix)
                self.decomposition.J  # noqa: B018 - factor eagerly so errors surface here
                self.decomposition._J_lu  # noqa: B018
            except BlockTooShort:
                if method == "fast":
                    raise
        if self.decomposition is None:
            self._lu = _lu_checked(self.matrix.dense(), SingularMatrix, "system matrix A")

    @property
    def method(self) -> SolveMethod:
        return SolveMethod.DIRECT if self.decomposition is None else SolveMethod.FAST_TOEPLITZ

    def solve(self, s: np.ndarray) -> AfSolution:
        if self.decomposition is None:
            return solve_direct(self.matrix, s, lu=self._lu)
        return solve_fast(self.decomposition, s)

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return self.solve(s).z
