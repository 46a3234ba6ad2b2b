"""Synthetic labelled recordings standing in for field data.

The class templates only mimic the coarse structure of the real classes
(long low moans, short downsweeps, persistent tonal noise, ambient noise);
they make no claim of bioacoustic fidelity.

SNR convention: an event's mean power over its duration is ``snr_db`` above
the ambient noise power inside the event's annotated frequency band.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .dataset import AMBIENT_LABEL, Annotation, derive_seed
from .dsp import AudioBuffer
from .errors import InvalidParameterError
from .formats import write_annotations, write_wav

HEADROOM = 0.99


class EventKind(str, Enum):
    DOWNSWEEP = "downsweep"
    MOAN = "moan"
    TONAL_NOISE = "tonal_noise"
    AMBIENT = "ambient"


class NoiseColor(str, Enum):
    WHITE = "white"
    PINK = "pink"


@dataclass(frozen=True)
class SynthEventSpec:
    kind: EventKind
    f_start: float
    f_end: float
    duration: float
    snr_db: float = 20.0
    harmonics: int = 0

    def validate(self, sample_rate_hz):
        nyquist = sample_rate_hz / 2
        if not self.duration > 0:
            raise InvalidParameterError(f"event duration must be positive, got {self.duration}")
        if self.kind is not EventKind.AMBIENT:
            for f in (self.f_start, self.f_end):
                if not 0 < f < nyquist:
                    raise InvalidParameterError(f"event frequency {f} Hz outside (0, {nyquist}) Hz")
        if self.harmonics < 0:
            raise InvalidParameterError("harmonics must be >= 0")

    def annotation_band(self):
        lo, hi = sorted((self.f_start, self.f_end))
        return max(lo * 0.9 - 2.0, 0.5), hi * 1.1 + 2.0


@dataclass(frozen=True)
class EventTemplate:
    """Jitter ranges; each draw picks values uniformly inside them."""

    kind: EventKind
    f_start: tuple
    f_end: tuple
    duration: tuple
    harmonics: int = 0
    # f_end is drawn relative to f_start when True (keeps moans flat)
    relative_end: bool = False

    def draw(self, rng, snr_db):
        f_start = rng.uniform(*self.f_start)
        f_end = rng.uniform(*self.f_end)
        if self.relative_end:
            f_end = f_start + f_end
        return SynthEventSpec(self.kind, float(f_start), float(f_end),
                              float(rng.uniform(*self.duration)), snr_db, self.harmonics)


def default_templates():
    return {
        "BW": [EventTemplate(EventKind.MOAN, (17.0, 20.0), (-1.0, 0.0), (5.0, 10.0), relative_end=True)],
        "SW": [EventTemplate(EventKind.DOWNSWEEP, (75.0, 85.0), (28.0, 35.0), (1.2, 1.6))],
        "FW": [EventTemplate(EventKind.DOWNSWEEP, (24.0, 28.0), (15.0, 18.0), (0.8, 1.2))],
        "NN": [EventTemplate(EventKind.TONAL_NOISE, (50.0, 150.0), (200.0, 500.0), (20.0, 28.0), harmonics=2)],
    }


@dataclass
class SynthCorpusConfig:
    counts: dict = field(default_factory=lambda: {"BW": 10, "SW": 10, "FW": 10, "NN": 10, AMBIENT_LABEL: 10})
    templates: dict = field(default_factory=default_templates)
    recording_len: float = 60.0
    sample_rate_hz: float = 8000.0
    ambient_noise_color: NoiseColor = NoiseColor.PINK
    noise_rms: float = 0.02
    snr_db: float = 20.0
    master_seed: int = 0

    def __post_init__(self):
        self.ambient_noise_color = NoiseColor(self.ambient_noise_color)
        if self.recording_len < 30.0:
            raise InvalidParameterError("recording_len must be at least 30 s to hold an excerpt")
        for label, n in self.counts.items():
            if n < 0:
                raise InvalidParameterError(f"negative count for {label}")
            if label != AMBIENT_LABEL and n and label not in self.templates:
                raise InvalidParameterError(f"no event template for class {label!r}")


def pink_noise(n, rng, n_rows=16):
    """Unit-variance 1/f-like noise (summed octave rows, Voss-McCartney style)."""
    total = rng.standard_normal(n)
    for r in range(1, n_rows):
        step = 1 << r
        total += np.repeat(rng.standard_normal(-(-n // step)), step)[:n]
    return total / total.std()


def colored_noise(n, color, rng):
    if NoiseColor(color) is NoiseColor.WHITE:
        return rng.standard_normal(n)
    return pink_noise(n, rng)


def band_power(x, sample_rate_hz, f_lo, f_hi):
    """Power of ``x`` inside [f_lo, f_hi] Hz (one-sided periodogram sum)."""
    spectrum = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(len(x), 1.0 / sample_rate_hz)
    band = (freqs >= f_lo) & (freqs <= f_hi)
    return 2.0 * np.sum(np.abs(spectrum[band]) ** 2) / len(x) ** 2


def _tone_bank(phase, harmonics, f_max, sample_rate_hz):
    out = np.sin(phase)
    for h in range(2, harmonics + 2):
        if f_max * h < sample_rate_hz / 2:
            out = out + np.sin(h * phase) / h
    return out


def synth_event(spec, sample_rate_hz, rng, noise_band_power=1.0):
    """Event waveform, scaled so its mean power is ``snr_db`` above ``noise_band_power``.

    Ambient events are unit-variance pink noise and ignore the scaling.
    """
    spec.validate(sample_rate_hz)
    n = int(round(spec.duration * sample_rate_hz))
    if n < 1:
        raise InvalidParameterError(f"event of {spec.duration} s is shorter than one sample")
    if spec.kind is EventKind.AMBIENT:
        return AudioBuffer(pink_noise(n, rng), sample_rate_hz)

    t = np.arange(n) / sample_rate_hz
    phi0 = rng.uniform(0, 2 * np.pi)
    if spec.kind is EventKind.TONAL_NOISE:
        wave = np.zeros(n)
        for f in (spec.f_start, spec.f_end):
            wave += _tone_bank(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi), spec.harmonics, f, sample_rate_hz)
        envelope = np.ones(n)
        ramp = min(n // 2, int(0.05 * sample_rate_hz))
        if ramp:
            envelope[:ramp] = envelope[-ramp:][::-1] = np.linspace(0.0, 1.0, ramp)
    else:
        sweep = (spec.f_end - spec.f_start) / spec.duration
        phase = 2 * np.pi * (spec.f_start * t + 0.5 * sweep * t**2) + phi0
        wave = _tone_bank(phase, spec.harmonics, max(spec.f_start, spec.f_end), sample_rate_hz)
        envelope = 0.5 * (1 - np.cos(2 * np.pi * (np.arange(n) + 0.5) / n))
    wave = wave * envelope
    target = noise_band_power * 10.0 ** (spec.snr_db / 10.0)
    wave *= np.sqrt(target / np.mean(wave**2))
    return AudioBuffer(wave, sample_rate_hz)


def recording_id(label, index):
    return f"{label}_{index:05d}"


def synth_recording(config, label, index):
    """Generate one recording; returns ``(AudioBuffer, Annotation or None)``.

    Deterministic in ``(config.master_seed, label, index)`` alone.
    """
    rng = np.random.default_rng(derive_seed(config.master_seed, "synth", label, index))
    sr = config.sample_rate_hz
    n = int(round(config.recording_len * sr))
    noise = colored_noise(n, config.ambient_noise_color, rng) * config.noise_rms
    rec = recording_id(label, index)
    if label == AMBIENT_LABEL:
        return _headroom(AudioBuffer(noise, sr)), None

    templates = config.templates[label]
    spec = templates[int(rng.integers(len(templates)))].draw(rng, config.snr_db)
    f_lo, f_hi = spec.annotation_band()
    event = synth_event(spec, sr, rng, band_power(noise, sr, f_lo, f_hi))
    m = len(event)
    if m > n:
        raise InvalidParameterError(f"event of {spec.duration} s does not fit a {config.recording_len} s recording")
    i0 = int(rng.integers(0, n - m + 1))
    signal = noise.copy()
    signal[i0 : i0 + m] += event.samples
    anno = Annotation(rec, i0 / sr, (i0 + m) / sr, f_lo, f_hi, label)
    return _headroom(AudioBuffer(signal, sr)), anno


def _headroom(buffer):
    peak = np.max(np.abs(buffer.samples))
    if peak > HEADROOM:
        return AudioBuffer(buffer.samples * (HEADROOM / peak), buffer.sample_rate_hz)
    return buffer


def corpus_items(config):
    return [(label, i) for label, count in config.counts.items() for i in range(count)]


def write_recording(config, out_dir, label, index):
    buffer, anno = synth_recording(config, label, index)
    sub = "ambient" if anno is None else "recordings"
    path = Path(out_dir) / sub / f"{recording_id(label, index)}.wav"
    try:
        write_wav(path, buffer)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    return path, anno


def build_synthetic_corpus(config, out_dir, map_fn=map):
    """Write ``recordings/*.wav``, ``ambient/*.wav`` and ``annotations.csv``.

    ``map_fn`` lets callers farm recordings out to a process pool; output is
    identical whichever map is used.
    """
    out_dir = Path(out_dir)
    for sub in ("recordings", "ambient"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    items = corpus_items(config)
    results = list(map_fn(_write_item, [(config, str(out_dir), label, i) for label, i in items]))
    annotations = [anno for _, anno in results if anno is not None]
    write_annotations(annotations, out_dir / "annotations.csv")
    return [path for path, _ in results], annotations


def _write_item(args):
    return write_recording(*args)
