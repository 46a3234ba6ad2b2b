"""Windowing, STFT, power/dB conversion and frequency truncation."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyBandError, InvalidParameterError, SignalTooShortError
from .fft import is_power_of_two, rfft_rows

#: Power floor added before taking logarithms; 10*log10(1e-12) = -120 dB.
DB_FLOOR = 1e-12


class WindowKind(str, Enum):
    HANN = "hann"


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidParameterError(f"audio must be mono (1-D), got shape {samples.shape}")
        if not self.sample_rate_hz > 0:
            raise InvalidParameterError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate_hz

    def slice_seconds(self, start, length):
        """Sub-buffer of ``length`` seconds starting at ``start`` (rounded to samples)."""
        i0 = int(round(start * self.sample_rate_hz))
        n = int(round(length * self.sample_rate_hz))
        if i0 < 0 or i0 + n > len(self):
            raise SignalTooShortError(
                f"slice [{start}, {start + length}] s lies outside a {self.duration:.3f} s buffer"
            )
        return AudioBuffer(self.samples[i0 : i0 + n], self.sample_rate_hz)


@dataclass(frozen=True)
class StftParams:
    window_len: int
    hop: int
    window_kind: WindowKind = WindowKind.HANN
    fft_len: int = 0

    def __post_init__(self):
        if self.fft_len == 0:
            object.__setattr__(self, "fft_len", self.window_len)
        object.__setattr__(self, "window_kind", WindowKind(self.window_kind))
        if self.window_len < 1:
            raise InvalidParameterError(f"window_len must be >= 1, got {self.window_len}")
        if not 0 < self.hop <= self.window_len:
            raise InvalidParameterError(f"hop must satisfy 0 < hop <= window_len, got {self.hop}")
        if not is_power_of_two(self.fft_len) or self.fft_len < self.window_len:
            raise InvalidParameterError(
                f"fft_len must be a power of two >= window_len, got {self.fft_len}"
            )

    @classmethod
    def quarter_hop(cls, window_len):
        """Hann window with hop = window_len / 4 (75 % overlap)."""
        return cls(window_len=window_len, hop=max(window_len // 4, 1))

    @property
    def n_bins(self):
        return self.fft_len // 2 + 1

    def n_frames(self, n_samples):
        if n_samples < self.window_len:
            return 0
        return (n_samples - self.window_len) // self.hop + 1


@dataclass(frozen=True)
class Spectrogram:
    """dB-valued matrix with frequency along rows and time along columns."""

    values: np.ndarray
    freq_axis: np.ndarray
    time_axis: np.ndarray
    params: StftParams
    sample_rate_hz: float = field(default=0.0)

    @property
    def shape(self):
        return self.values.shape

    @property
    def freq_step(self):
        return self.sample_rate_hz / self.params.fft_len

    @property
    def time_step(self):
        return self.params.hop / self.sample_rate_hz


def make_window(kind, n):
    """Periodic window of length ``n``; for Hann ``0.5 * (1 - cos(2*pi*m/n))``."""
    kind = WindowKind(kind)
    if n < 1:
        raise InvalidParameterError(f"window length must be >= 1, got {n}")
    m = np.arange(n, dtype=np.float64)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * m / n))


def stft(signal, params):
    """Complex STFT, shape ``(fft_len // 2 + 1, n_frames)``.

    Frame ``t`` covers samples ``[t*hop, t*hop + window_len)``; only fully
    interior frames are produced, so there is no edge padding.
    """
    x = signal.samples
    if len(x) < params.window_len:
        raise SignalTooShortError(
            f"signal has {len(x)} samples, shorter than one window of {params.window_len}"
        )
    frames = np.lib.stride_tricks.sliding_window_view(x, params.window_len)[:: params.hop]
    frames = frames * make_window(params.window_kind, params.window_len)
    if params.fft_len > params.window_len:
        frames = np.pad(frames, ((0, 0), (0, params.fft_len - params.window_len)))
    spectrum = rfft_rows(frames)
    return np.ascontiguousarray(spectrum.T)


def power_db(frames, params, sample_rate_hz):
    """``10*log10(|X|^2 + 1e-12)`` with frame-centre timestamps."""
    frames = np.asarray(frames)
    if frames.size == 0:
        raise InvalidParameterError("cannot convert an empty frame matrix")
    power = frames.real**2 + frames.imag**2
    values = 10.0 * np.log10(power + DB_FLOOR)
    n_bins, n_frames = values.shape
    freq_axis = np.arange(n_bins) * (sample_rate_hz / params.fft_len)
    time_axis = (np.arange(n_frames) * params.hop + params.window_len / 2) / sample_rate_hz
    return Spectrogram(values, freq_axis, time_axis, params, float(sample_rate_hz))


def truncate_freq(spec, f_lo, f_hi):
    """Keep rows with ``f_lo <= freq <= f_hi``; cell values are copied untouched."""
    if not f_lo < f_hi:
        raise InvalidParameterError(f"need f_lo < f_hi, got [{f_lo}, {f_hi}]")
    keep = (spec.freq_axis >= f_lo) & (spec.freq_axis <= f_hi)
    if not keep.any():
        raise EmptyBandError(f"no frequency bins fall inside [{f_lo}, {f_hi}] Hz")
    return Spectrogram(
        spec.values[keep],
        spec.freq_axis[keep],
        spec.time_axis,
        spec.params,
        spec.sample_rate_hz,
    )


def spectrogram(signal, params, band=None):
    """STFT -> dB -> optional truncation to ``band = (f_lo, f_hi)``."""
    spec = power_db(stft(signal, params), params, signal.sample_rate_hz)
    if band is not None:
        spec = truncate_freq(spec, *band)
    return spec


def minmax_normalize(values):
    """Scale to [0, 1]; a constant input maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)
