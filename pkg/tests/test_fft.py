import numpy as np
import pytest

from hrbench import fft
from hrbench.errors import InputError


def dft_oracle(x):
    """Direct O(n^2) DFT, the independent reference for every FFT test."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    k = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return x @ w.T


@pytest.mark.parametrize("n", [2, 3, 4, 5, 8, 12, 16, 27, 31, 64, 100, 128, 200, 255, 256])
def test_fft_matches_direct_dft(n):
    rng = np.random.default_rng(n)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.max(np.abs(fft.fft(z) - dft_oracle(z))) < 1e-8


@pytest.mark.parametrize("n", [2, 3, 4, 7, 16, 48, 97, 128, 256])
def test_rfft_magnitudes_match_direct_dft(n):
    rng = np.random.default_rng(100 + n)
    x = rng.uniform(-1, 1, size=n)
    expected = np.abs(dft_oracle(x))[: n // 2 + 1]
    assert np.max(np.abs(fft.rfft_magnitudes(x) - expected)) < 1e-8


def test_ifft_round_trip():
    rng = np.random.default_rng(7)
    for n in (8, 12, 33):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        assert np.max(np.abs(fft.ifft(fft.fft(z)) - z)) < 1e-10


def test_batched_transform_matches_per_row():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, size=(5, 24))
    batched = fft.rfft_magnitudes(x)
    rows = np.stack([fft.rfft_magnitudes(r) for r in x])
    assert np.array_equal(batched, rows)


def test_constant_series_is_pure_dc():
    mags = fft.rfft_magnitudes(np.full(32, 3.5))
    assert mags[0] == pytest.approx(32 * 3.5)
    assert np.max(np.abs(mags[1:])) < 1e-9


def test_planted_sine_has_unique_dominant_bin():
    t = np.arange(64)
    x = np.sin(2 * np.pi * t / 16.0)
    mags = fft.rfft_magnitudes(x)
    assert np.argmax(mags) == 4
    others = np.delete(mags, 4)
    assert mags[4] > 10 * others.max()


def test_linearity_against_complex_sum_oracle():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, 48)
    y = rng.uniform(-1, 1, 48)
    lhs = fft.rfft_magnitudes(x + y)
    rhs = np.abs(dft_oracle(x) + dft_oracle(y))[:25]
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_rfft_rejects_short_input():
    with pytest.raises(InputError):
        fft.rfft_magnitudes(np.array([1.0]))


def test_rfft_adjoint_is_transpose_of_truncated_transform():
    # real pairing: <g, F(x)>_R == <F^T(g), x> for the bin-truncated transform
    rng = np.random.default_rng(5)
    n = 20
    x = rng.uniform(-1, 1, n)
    g = rng.standard_normal(n // 2 + 1) + 1j * rng.standard_normal(n // 2 + 1)
    fx = fft.rfft(x)
    lhs = np.sum(np.real(np.conj(g) * fx))
    rhs = np.sum(fft.rfft_adjoint(g, n) * x)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@pytest.mark.parametrize("period", [8, 16, 24])
def test_dominant_periods_finds_planted_period(period):
    t = np.arange(240)
    x = np.sin(2 * np.pi * t / period)
    periods, _, amps = fft.dominant_periods(x, k=3)
    assert periods[0] == period
    assert amps[0] > amps[1]


def test_dominant_periods_batched_rows_independent():
    t = np.arange(96)
    x = np.stack([np.sin(2 * np.pi * t / 8), np.sin(2 * np.pi * t / 16)])
    periods, _, _ = fft.dominant_periods(x, k=2)
    assert periods[0, 0] == 8
    assert periods[1, 0] == 16
