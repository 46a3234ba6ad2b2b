"""Radix-2 decimation-in-time FFT.

Two kernels compute the same butterflies: ``_fft_rows_numba`` walks each row
with scalar loops (rows run in parallel under ``prange``), ``_fft_rows_numpy``
vectorises every stage across all rows and butterfly groups at once.
"""

from functools import lru_cache

import numpy as np

from . import _accel
from ._accel import njit, prange
from .errors import InvalidParameterError


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=64)
def _plan(n):
    """Bit-reversal permutation and half-length twiddle table for size ``n``."""
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    twiddles = np.exp(-2j * np.pi * np.arange(max(n // 2, 1)) / n)
    rev.setflags(write=False)
    twiddles.setflags(write=False)
    return rev, twiddles


@njit(cache=True, parallel=True)
def _fft_rows_numba(x, rev, twiddles):
    n_rows, n = x.shape
    out = np.empty_like(x)
    for r in prange(n_rows):
        row = out[r]
        src = x[r]
        for i in range(n):
            row[i] = src[rev[i]]
        half = 1
        while half < n:
            stride = n // (2 * half)
            # twiddle outermost: each factor is loaded once per stage
            for k in range(half):
                w = twiddles[k * stride]
                for start in range(0, n, 2 * half):
                    a = row[start + k]
                    b = row[start + k + half] * w
                    row[start + k] = a + b
                    row[start + k + half] = a - b
            half <<= 1
    return out


def _fft_rows_numpy(x, rev, twiddles):
    n_rows, n = x.shape
    out = x[:, rev]
    m = 2
    while m <= n:
        half = m >> 1
        w = twiddles[:: n // m][:half]
        blocks = out.reshape(n_rows, n // m, m)
        a = blocks[..., :half]
        b = blocks[..., half:] * w
        out = np.concatenate((a + b, a - b), axis=-1).reshape(n_rows, n)
        m <<= 1
    return out


def fft_rows(x):
    """FFT along the last axis of a 2-D array whose row length is a power of two."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    if x.ndim != 2:
        raise InvalidParameterError(f"expected a 2-D array, got shape {x.shape}")
    n = x.shape[1]
    if not is_power_of_two(n):
        raise InvalidParameterError(f"FFT length must be a power of two, got {n}")
    if x.shape[0] == 0:
        return x.copy()
    rev, twiddles = _plan(n)
    if _accel.use_numba():
        return _fft_rows_numba(x, rev, twiddles)
    return _fft_rows_numpy(x, rev, twiddles)


@njit(cache=True, parallel=True)
def _unpack_pairs_numba(z, n_rows):
    n_pairs, n = z.shape
    m = n // 2 + 1
    out = np.empty((n_rows, m), dtype=np.complex128)
    for p in prange(n_pairs):
        for k in range(m):
            a = z[p, k]
            b = np.conj(z[p, (n - k) % n])
            out[2 * p, k] = 0.5 * (a + b)
            if 2 * p + 1 < n_rows:
                out[2 * p + 1, k] = -0.5j * (a - b)
    return out


def _unpack_pairs_numpy(z, n_rows):
    n = z.shape[1]
    mirror = np.conj(z[:, (-np.arange(n // 2 + 1)) % n])
    half = z[:, : n // 2 + 1]
    out = np.empty((2 * z.shape[0], n // 2 + 1), dtype=np.complex128)
    out[0::2] = 0.5 * (half + mirror)
    out[1::2] = -0.5j * (half - mirror)
    return out[:n_rows]


def rfft_rows(x):
    """Non-negative-frequency half spectrum of each real row, shape ``(rows, n // 2 + 1)``.

    Rows are packed in pairs as ``a + 1j*b`` so one complex transform serves
    two real ones; the halves are separated with conjugate symmetry.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidParameterError(f"expected a 2-D array, got shape {x.shape}")
    n_rows, n = x.shape
    if not is_power_of_two(n):
        raise InvalidParameterError(f"FFT length must be a power of two, got {n}")
    if n_rows % 2:
        x = np.vstack((x, np.zeros((1, n))))
    packed = np.empty((x.shape[0] // 2, n), dtype=np.complex128)
    packed.real = x[0::2]
    packed.imag = x[1::2]
    z = fft_rows(packed)
    if _accel.use_numba():
        return _unpack_pairs_numba(z, n_rows)
    return _unpack_pairs_numpy(z, n_rows)


def fft(x):
    """Discrete Fourier transform ``X[k] = sum_m x[m] exp(-2j*pi*k*m/N)``.

    ``len(x)`` must be a power of two; anything else raises
    :class:`~specstack.errors.InvalidParameterError`.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise InvalidParameterError(f"fft expects a 1-D vector, got shape {x.shape}")
    return fft_rows(x[np.newaxis, :])[0]
