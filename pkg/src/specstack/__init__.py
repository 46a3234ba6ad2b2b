"""Multi-resolution stacked spectrograms for marine-mammal acoustic classification."""

from ._accel import backend, set_backend, using_backend
from .dataset import (
    Annotation,
    DatasetSplit,
    LabeledSample,
    extract_excerpt,
    sample_ambient,
    sample_containing,
    split_dataset,
)
from .dsp import AudioBuffer, Spectrogram, StftParams, WindowKind, make_window, power_db, spectrogram, stft, truncate_freq
from .fft import fft
from .mel import MelParams, hz_to_mel, mel_spectrogram, mel_to_hz
from .stacker import (
    ExplicitGrid,
    FromMinResolution,
    StackedTensor,
    StackParams,
    interpolate_to_grid,
    min_resolutions,
    stack_representation,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AudioBuffer",
    "DatasetSplit",
    "ExplicitGrid",
    "FromMinResolution",
    "LabeledSample",
    "MelParams",
    "Spectrogram",
    "StackParams",
    "StackedTensor",
    "StftParams",
    "WindowKind",
    "backend",
    "extract_excerpt",
    "fft",
    "hz_to_mel",
    "interpolate_to_grid",
    "make_window",
    "mel_spectrogram",
    "mel_to_hz",
    "min_resolutions",
    "power_db",
    "sample_ambient",
    "sample_containing",
    "set_backend",
    "spectrogram",
    "split_dataset",
    "stack_representation",
    "stft",
    "truncate_freq",
    "using_backend",
]
