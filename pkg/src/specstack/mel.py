"""Mel scale conversion and triangular-filterbank mel spectrograms."""

from dataclasses import dataclass

import numpy as np

from .dsp import DB_FLOOR, Spectrogram, stft
from .errors import InvalidParameterError


@dataclass(frozen=True)
class MelParams:
    n_mels: int = 128
    f_lo: float = 10.0
    f_hi: float = 1000.0

    def __post_init__(self):
        if self.n_mels < 2:
            raise InvalidParameterError(f"n_mels must be >= 2, got {self.n_mels}")
        if not 0 <= self.f_lo < self.f_hi:
            raise InvalidParameterError(f"need 0 <= f_lo < f_hi, got [{self.f_lo}, {self.f_hi}]")


def hz_to_mel(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise InvalidParameterError("frequency must be non-negative")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise InvalidParameterError("mel value must be non-negative")
    out = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


def mel_edges_hz(mel):
    """``n_mels + 2`` edge frequencies equally spaced in mels over [f_lo, f_hi]."""
    points = np.linspace(hz_to_mel(mel.f_lo), hz_to_mel(mel.f_hi), mel.n_mels + 2)
    edges = mel_to_hz(points)
    # pin the ends so round-off cannot push them outside the band
    edges[0], edges[-1] = mel.f_lo, mel.f_hi
    return edges


def mel_filterbank(mel, fft_len, sample_rate_hz):
    """Unit-peak triangular filters, shape ``(n_mels, fft_len // 2 + 1)``.

    Filter ``i`` rises from ``edges[i]`` to 1 at ``edges[i+1]`` and falls back
    to 0 at ``edges[i+2]``; weights apply to power, not magnitude.
    """
    if mel.f_hi > sample_rate_hz / 2:
        raise InvalidParameterError(
            f"mel band upper edge {mel.f_hi} Hz exceeds Nyquist {sample_rate_hz / 2} Hz"
        )
    freqs = np.arange(fft_len // 2 + 1) * (sample_rate_hz / fft_len)
    edges = mel_edges_hz(mel)
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (centre - lower)
    falling = (upper - freqs) / (upper - centre)
    return np.maximum(0.0, np.minimum(rising, falling))


def mel_spectrogram(signal, stft_params, mel):
    frames = stft(signal, stft_params)
    power = frames.real**2 + frames.imag**2
    bank = mel_filterbank(mel, stft_params.fft_len, signal.sample_rate_hz)
    values = 10.0 * np.log10(bank @ power + DB_FLOOR)
    centres = mel_edges_hz(mel)[1:-1]
    time_axis = (
        np.arange(power.shape[1]) * stft_params.hop + stft_params.window_len / 2
    ) / signal.sample_rate_hz
    return Spectrogram(values, centres, time_axis, stft_params, float(signal.sample_rate_hz))
