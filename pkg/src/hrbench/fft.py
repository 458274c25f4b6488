"""Discrete Fourier transforms built from scratch.

Radix-2 iterative Cooley-Tukey for power-of-two lengths, Bluestein's
chirp-z algorithm for everything else. All routines operate on the last
axis and are vectorized over any leading axes, which keeps the per-call
Python overhead flat when a whole training batch is transformed at once.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _bit_reverse_permutation(n: int) -> np.ndarray:
    # n must be a power of two
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_pow2(z: np.ndarray, inverse: bool = False) -> np.ndarray:
    """In-place style radix-2 DIT FFT over the last axis (length = power of 2)."""
    n = z.shape[-1]
    out = np.array(z[..., _bit_reverse_permutation(n)], dtype=np.complex128)
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocked = out.reshape(out.shape[:-1] + (n // size, size))
        even = blocked[..., :half].copy()
        odd = blocked[..., half:] * tw
        blocked[..., :half] = even + odd
        blocked[..., half:] = even - odd
        size *= 2
    return out


def _fft_bluestein(z: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Chirp-z transform: an arbitrary-length DFT via one power-of-two convolution."""
    n = z.shape[-1]
    sign = 1.0 if inverse else -1.0
    k = np.arange(n)
    chirp = np.exp(sign * 1j * np.pi * (k * k % (2 * n)) / n)
    m = 1
    while m < 2 * n - 1:
        m *= 2
    a = np.zeros(z.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = z * chirp
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:][::-1])
    conv = _fft_pow2(_fft_pow2(a) * _fft_pow2(b), inverse=True) / m
    return conv[..., :n] * chirp


def fft(z: np.ndarray) -> np.ndarray:
    """Complex DFT over the last axis, any length >= 1."""
    z = np.asarray(z, dtype=np.complex128)
    n = z.shape[-1]
    if n < 1:
        raise InputError("fft requires length >= 1")
    if n == 1:
        return z.copy()
    if _is_pow2(n):
        return _fft_pow2(z)
    return _fft_bluestein(z)


def ifft(z: np.ndarray) -> np.ndarray:
    """Inverse complex DFT over the last axis (includes the 1/n factor)."""
    z = np.asarray(z, dtype=np.complex128)
    n = z.shape[-1]
    if n < 1:
        raise InputError("ifft requires length >= 1")
    if n == 1:
        return z.copy()
    if _is_pow2(n):
        return _fft_pow2(z, inverse=True) / n
    return _fft_bluestein(z, inverse=True) / n


def rfft(x: np.ndarray) -> np.ndarray:
    """DFT of real input, returning bins 0..n//2 of the last axis."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n < 2:
        raise InputError("rfft requires length >= 2")
    return fft(x)[..., : n // 2 + 1]


def rfft_magnitudes(x: np.ndarray) -> np.ndarray:
    """Magnitudes of the real-input DFT; bin 0 carries the mean component."""
    return np.abs(rfft(x))


def rfft_adjoint(grad_bins: np.ndarray, n: int) -> np.ndarray:
    """Map a complex cotangent on bins 0..n//2 back to the real input.

    Computes d<grad, F(x)> / dx for the bin-truncated transform, i.e.
    Re(sum_k g_k e^{2 pi i k t / n}) without conjugate-symmetric completion.
    """
    padded = np.zeros(grad_bins.shape[:-1] + (n,), dtype=np.complex128)
    padded[..., : grad_bins.shape[-1]] = grad_bins
    # IDFT * n == conj(DFT(conj(.)))
    return np.real(np.conj(fft(np.conj(padded))))


def dominant_periods(x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-k non-DC spectral peaks of each row, as (periods, bins, amplitudes).

    x has shape [..., n]; periods are round(n / bin) clipped to [1, n],
    with shape [..., k]. Peaks are ordered by descending amplitude; ties
    resolve to the lower bin for determinism.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    mags = rfft_magnitudes(x)
    nonzero = mags[..., 1:]  # drop DC
    if k < 1:
        raise InputError("k must be >= 1")
    k = min(k, nonzero.shape[-1])
    # stable top-k: sort by (-amplitude, bin)
    order = np.argsort(-nonzero, axis=-1, kind="stable")[..., :k]
    bins = order + 1
    periods = np.rint(n / bins).astype(np.int64)
    np.clip(periods, 1, n, out=periods)
    amps = np.take_along_axis(mags, bins, axis=-1)
    return periods, bins, amps
