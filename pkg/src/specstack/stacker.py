"""Multi-resolution stacked spectrograms.

Each channel is a dB spectrogram computed with its own STFT parameters. All
channels are resampled with piecewise-linear interpolation onto one common
frequency x time grid and stacked into a ``(k, H, W)`` tensor.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from ._accel import njit, prange
from .dsp import StftParams, spectrogram
from .errors import DegenerateSourceError, InvalidParameterError, SignalTooShortError

STANDARD_WINDOWS = (256, 2048, 16384)
STANDARD_BAND = (10.0, 1000.0)
STANDARD_GRID = (256, 128)


@dataclass(frozen=True)
class ExplicitGrid:
    height: int
    width: int

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise InvalidParameterError(f"grid must be at least 2x2, got {self.height}x{self.width}")


@dataclass(frozen=True)
class FromMinResolution:
    """Grid spacing taken from the finest bin and frame spacing among the channels."""


@dataclass(frozen=True)
class StackParams:
    channel_params: tuple
    band: tuple = STANDARD_BAND
    grid: object = field(default_factory=lambda: ExplicitGrid(*STANDARD_GRID))

    def __post_init__(self):
        object.__setattr__(self, "channel_params", tuple(self.channel_params))
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if not self.channel_params:
            raise InvalidParameterError("at least one channel is required")
        if not self.band[0] < self.band[1]:
            raise InvalidParameterError(f"band must satisfy f_lo < f_hi, got {self.band}")

    @classmethod
    def standard(cls):
        """Windows 256/2048/16384, Hann, hop = window/4, 10-1000 Hz, 256x128 grid."""
        return cls(tuple(StftParams.quarter_hop(w) for w in STANDARD_WINDOWS))

    @property
    def k(self):
        return len(self.channel_params)


@dataclass(frozen=True)
class StackedTensor:
    values: np.ndarray
    grid_freq_axis: np.ndarray
    grid_time_axis: np.ndarray
    channel_meta: tuple = ()

    @property
    def shape(self):
        return self.values.shape


def _bracket(src, dst):
    """Left neighbour index and fractional position of every ``dst`` point in ``src``.

    Points outside ``[src[0], src[-1]]`` are clamped, giving constant
    extrapolation.
    """
    n = src.shape[0]
    x = np.clip(dst, src[0], src[-1])
    idx = np.clip(np.searchsorted(src, x, side="right") - 1, 0, n - 2)
    frac = (x - src[idx]) / (src[idx + 1] - src[idx])
    return idx.astype(np.int64), np.clip(frac, 0.0, 1.0)


@njit(cache=True, inline="always")
def _lerp(a, b, f):
    if f >= 1.0:
        return b
    v = a + (b - a) * f
    lo, hi = (a, b) if a <= b else (b, a)
    return min(max(v, lo), hi)


@njit(cache=True, parallel=True)
def _bilinear_numba(values, fi, ff, ti, tf):
    h, w = fi.shape[0], ti.shape[0]
    out = np.empty((h, w))
    for r in prange(h):
        i = fi[r]
        fr = ff[r]
        for c in range(w):
            j = ti[c]
            tc = tf[c]
            lower = _lerp(values[i, j], values[i, j + 1], tc)
            upper = _lerp(values[i + 1, j], values[i + 1, j + 1], tc)
            out[r, c] = _lerp(lower, upper, fr)
    return out


def _lerp_np(a, b, f):
    v = np.clip(a + (b - a) * f, np.minimum(a, b), np.maximum(a, b))
    return np.where(f >= 1.0, b, v)


def _bilinear_numpy(values, fi, ff, ti, tf):
    # along time first, then along frequency
    along_time = _lerp_np(values[:, ti], values[:, ti + 1], tf[np.newaxis, :])
    return _lerp_np(along_time[fi], along_time[fi + 1], ff[:, np.newaxis])


def interpolate_to_grid(spec, target_freq_axis, target_time_axis):
    """Bilinear resampling of ``spec.values`` onto the target axes.

    Linear interpolation along time, then along frequency. Targets outside
    the source range take the nearest edge value.
    """
    values = np.ascontiguousarray(spec.values, dtype=np.float64)
    freq = np.asarray(spec.freq_axis, dtype=np.float64)
    time = np.asarray(spec.time_axis, dtype=np.float64)
    if freq.shape[0] < 2 or time.shape[0] < 2:
        raise DegenerateSourceError(
            f"need at least 2 bins and 2 frames to interpolate, got {values.shape}"
        )
    target_freq_axis = np.asarray(target_freq_axis, dtype=np.float64)
    target_time_axis = np.asarray(target_time_axis, dtype=np.float64)
    for name, axis in (("frequency", target_freq_axis), ("time", target_time_axis)):
        if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0):
            raise InvalidParameterError(f"target {name} axis must be non-empty and strictly ascending")
    fi, ff = _bracket(freq, target_freq_axis)
    ti, tf = _bracket(time, target_time_axis)
    if _accel.use_numba():
        return _bilinear_numba(values, fi, ff, ti, tf)
    return _bilinear_numpy(values, fi, ff, ti, tf)


def min_resolutions(specs):
    """Finest frequency spacing (Hz) and finest frame spacing (s) over ``specs``."""
    specs = list(specs)
    if not specs:
        raise InvalidParameterError("min_resolutions needs at least one spectrogram")
    d_freq = np.inf
    d_time = np.inf
    for spec in specs:
        d_freq = min(d_freq, spec.freq_step)
        d_time = min(d_time, spec.time_step)
    return d_freq, d_time


def _spaced(lo, hi, step):
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def grid_axes(specs, band, grid):
    """Common axes: the band in frequency, the overlap of all channels in time."""
    t_lo = max(s.time_axis[0] for s in specs)
    t_hi = min(s.time_axis[-1] for s in specs)
    if not t_hi > t_lo:
        raise DegenerateSourceError(
            f"channels share no time span to interpolate over ([{t_lo}, {t_hi}] s)"
        )
    f_lo, f_hi = band
    if isinstance(grid, ExplicitGrid):
        return np.linspace(f_lo, f_hi, grid.height), np.linspace(t_lo, t_hi, grid.width)
    if isinstance(grid, FromMinResolution):
        d_freq, d_time = min_resolutions(specs)
        return _spaced(f_lo, f_hi, d_freq), _spaced(t_lo, t_hi, d_time)
    raise InvalidParameterError(f"unknown grid specification {grid!r}")


def channel_spectrograms(signal, params):
    specs = []
    for i, theta in enumerate(params.channel_params):
        try:
            specs.append(spectrogram(signal, theta, band=params.band))
        except SignalTooShortError as exc:
            raise SignalTooShortError(f"channel {i}: {exc}", channel=i) from exc
    return specs


def stack_representation(signal, params):
    """Spectrogram per channel, interpolate onto one grid, stack in channel order."""
    specs = channel_spectrograms(signal, params)
    freq_axis, time_axis = grid_axes(specs, params.band, params.grid)
    values = np.stack([interpolate_to_grid(s, freq_axis, time_axis) for s in specs])
    return StackedTensor(values, freq_axis, time_axis, params.channel_params)
