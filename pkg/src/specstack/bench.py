"""Backend benchmark: numba kernels vs the numpy fallback.

Times the radix-2 FFT over a frame batch, the bilinear regrid, and the full
stacked representation of 10 s clips, then reports throughput in hours of
8 kHz audio per minute of wall time.
"""

import time

import numpy as np

from . import _accel
from .dsp import AudioBuffer, Spectrogram, StftParams
from .fft import fft_rows
from .stacker import StackParams, interpolate_to_grid, stack_representation


def _best_of(fn, repeat=3):
    fn()  # warm-up (and JIT compile)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def time_backends(n_samples=6, seed=0, repeat=3):
    """Seconds per task for each available backend: ``{backend: {task: seconds}}``."""
    rng = np.random.default_rng(seed)
    sr = 8000.0
    clips = [AudioBuffer(rng.standard_normal(int(10 * sr)), sr) for _ in range(n_samples)]
    frames = rng.standard_normal((1248, 256)) + 1j * rng.standard_normal((1248, 256))
    src = Spectrogram(rng.standard_normal((2028, 960)), np.linspace(10, 1000, 2028),
                      np.linspace(1.0, 8.7, 960), StftParams(16384, 4096), sr)
    target_f, target_t = np.linspace(10, 1000, 256), np.linspace(1.0, 8.7, 128)
    params = StackParams.standard()

    results = {}
    for name in _accel.available_backends():
        with _accel.using_backend(name):
            results[name] = {
                "fft 1248x256": _best_of(lambda: fft_rows(frames), repeat),
                "regrid 2028x960->256x128": _best_of(lambda: interpolate_to_grid(src, target_f, target_t), repeat),
                f"stack {n_samples} x 10 s": _best_of(lambda: [stack_representation(c, params) for c in clips], repeat),
            }
    return results


def run_benchmark(n_samples=6, seed=0, repeat=3):
    """Human-readable benchmark lines."""
    results = time_backends(n_samples, seed, repeat)
    tasks = list(next(iter(results.values())))
    names = list(results)
    lines = [f"{'task':<28}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else "")]
    for task in tasks:
        row = f"{task:<28}" + "".join(f"{results[n][task] * 1e3:>10.2f}ms" for n in names)
        if len(names) > 1:
            row += f"{results['numpy'][task] / results['numba'][task]:>11.2f}x"
        lines.append(row)
    stack_task = tasks[-1]
    for n in names:
        audio_s = n_samples * 10.0
        hours_per_min = audio_s / results[n][stack_task] * 60 / 3600
        lines.append(f"{n}: {hours_per_min:.2f} h of audio per minute (single process)")
    return lines
