"""Representation selection and batch orchestration (process / split / eval).

Work items are independent and carry their own derived seeds, so the bytes
written never depend on the worker count or completion order.
"""

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import (
    AMBIENT_LABEL,
    ambient_samples,
    materialize_samples,
    split_dataset,
)
from .dsp import StftParams, spectrogram
from .errors import FormatError, InvalidParameterError
from .formats import (
    read_annotations,
    read_manifest,
    read_sample_manifest,
    read_tensor,
    read_wav,
    write_manifest,
    write_sample_manifest,
    write_tensor,
)
from .mel import MelParams, mel_spectrogram
from .metrics import centroid_fit, centroid_predict, confusion, metrics
from .stacker import STANDARD_BAND, StackedTensor, StackParams, stack_representation

log = logging.getLogger(__name__)

TENSOR_SUFFIX = ".sst"


@dataclass(frozen=True)
class Representation:
    """One of the five classifier inputs: stacked, single linear window, or mel."""

    kind: str = "stacked"
    window_len: int = 2048
    stack: StackParams = None
    mel: MelParams = None
    band: tuple = STANDARD_BAND

    def __post_init__(self):
        if self.kind not in ("stacked", "linear", "mel"):
            raise InvalidParameterError(f"unknown representation {self.kind!r}")
        if self.kind == "stacked" and self.stack is None:
            object.__setattr__(self, "stack", StackParams.standard())
        if self.kind == "mel" and self.mel is None:
            object.__setattr__(self, "mel", MelParams(128, *self.band))
        if self.kind != "stacked":
            # fail at configuration time, not once per sample
            StftParams.quarter_hop(self.window_len)

    @classmethod
    def parse(cls, text):
        """``stacked``, ``mel`` or ``linear:<nfft>``."""
        text = text.strip().lower()
        if text == "stacked":
            return cls("stacked")
        if text == "mel":
            return cls("mel")
        if text.startswith("linear:"):
            try:
                return cls("linear", window_len=int(text.split(":", 1)[1]))
            except ValueError:
                pass
        raise InvalidParameterError(f"bad representation {text!r}; use stacked, mel or linear:<nfft>")

    def __str__(self):
        return f"linear:{self.window_len}" if self.kind == "linear" else self.kind


def compute_representation(buffer, rep):
    if rep.kind == "stacked":
        return stack_representation(buffer, rep.stack)
    if rep.kind == "linear":
        params = StftParams.quarter_hop(rep.window_len)
        spec = spectrogram(buffer, params, band=rep.band)
    else:
        spec = mel_spectrogram(buffer, StftParams.quarter_hop(rep.window_len), rep.mel)
    return StackedTensor(spec.values[np.newaxis], spec.freq_axis, spec.time_axis, (spec.params,))


# -- process -----------------------------------------------------------------

def corpus_lengths(corpus_dir, sub):
    """``(durations, failures)``; unreadable files are reported, not raised."""
    lengths, failures = {}, []
    for path in sorted((Path(corpus_dir) / sub).glob("*.wav")):
        try:
            lengths[path.stem] = read_wav(path).duration
        except (FormatError, OSError) as exc:
            failures.append((path.stem, f"{type(exc).__name__}: {exc}"))
    return lengths, failures


def plan_samples(corpus_dir, master_seed, sample_len=10.0, excerpt_len=30.0, ambient_per_file=1):
    """All samples to extract, in a fixed order: annotations first, then ambient files.

    Returns ``(samples, failures)``. Annotations on unreadable recordings
    are dropped and reported; seeds of the remaining samples are unaffected.
    """
    corpus_dir = Path(corpus_dir)
    annotations = read_annotations(corpus_dir / "annotations.csv")
    lengths, failures = corpus_lengths(corpus_dir, "recordings")
    unreadable = {stem for stem, _ in failures}
    missing = sorted({a.recording_id for a in annotations} - set(lengths) - unreadable)
    if missing:
        raise FileNotFoundError(f"annotated recordings missing from {corpus_dir / 'recordings'}: {missing}")
    annotations = [a for a in annotations if a.recording_id not in unreadable]
    samples = materialize_samples(annotations, lengths, master_seed, sample_len, excerpt_len)
    ambient, bad_ambient = corpus_lengths(corpus_dir, "ambient")
    samples += ambient_samples(ambient, master_seed, ambient_per_file, sample_len)
    return samples, failures + bad_ambient


def _recording_path(corpus_dir, sample):
    sub = "recordings" if sample.source_annotation is not None else "ambient"
    return Path(corpus_dir) / sub / f"{sample.recording_id}.wav"


def _process_batch(args):
    corpus_dir, out_dir, rep, batch = args
    failures = []
    cache = {}
    for sample in batch:
        try:
            path = _recording_path(corpus_dir, sample)
            if path not in cache:
                cache.clear()
                cache[path] = read_wav(path)
            excerpt = cache[path].slice_seconds(sample.sample_start, sample.sample_len)
            tensor = compute_representation(excerpt, rep)
            write_tensor(tensor, sample.label, Path(out_dir) / "tensors" / (sample.stem + TENSOR_SUFFIX))
        except Exception as exc:  # one bad file must not stop the batch
            failures.append((sample.stem, f"{type(exc).__name__}: {exc}"))
    return failures


def _batches(samples, n):
    # consecutive samples share recordings; keep them together for the wav cache
    size = max(1, -(-len(samples) // n))
    return [samples[i : i + size] for i in range(0, len(samples), size)]


def process_pool(workers):
    # fork after numba's OpenMP threads have started aborts the child
    return ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context("spawn"))


def run_parallel(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with process_pool(workers) as pool:
        return list(pool.map(fn, jobs))


def process_corpus(corpus_dir, out_dir, rep, master_seed, workers=1, sample_len=10.0,
                   excerpt_len=30.0, ambient_per_file=1):
    """Extract every sample, write one SST1 tensor per sample and ``manifest.csv``.

    Returns the list of ``(item, error)`` failures, where an item is a sample
    stem or an unreadable recording; failed samples are left out of the manifest.
    """
    out_dir = Path(out_dir)
    (out_dir / "tensors").mkdir(parents=True, exist_ok=True)
    samples, failures = plan_samples(corpus_dir, master_seed, sample_len, excerpt_len, ambient_per_file)
    stems = [s.stem for s in samples]
    if len(set(stems)) != len(stems):
        raise InvalidParameterError("two samples map to the same tensor file name")
    jobs = [(str(corpus_dir), str(out_dir), rep, b) for b in _batches(samples, max(workers, 1) * 4)]
    failures += [f for batch in run_parallel(_process_batch, jobs, workers) for f in batch]
    failed = {stem for stem, _ in failures}
    write_sample_manifest([s for s in samples if s.stem not in failed], out_dir / "manifest.csv")
    if failures:
        lines = ["item,error"] + [f"{stem},{err.replace(',', ';')}" for stem, err in failures]
        (out_dir / "failures.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        for stem, err in failures:
            log.error("failed %s: %s", stem, err)
    return failures


# -- split / eval ------------------------------------------------------------

def split_manifest(manifest_path, out_path, ratios=(0.70, 0.15, 0.15), seed=0, stratified=True):
    split = split_dataset(read_sample_manifest(manifest_path), ratios, seed, stratified)
    write_manifest(split, out_path)
    return split


def class_order(labels):
    """Default label order first, then any extra labels alphabetically."""
    from .dataset import DEFAULT_LABELS

    present = set(labels)
    return tuple([c for c in DEFAULT_LABELS if c in present] + sorted(present - set(DEFAULT_LABELS)))


def _tensor_path(tensor_dir, sample):
    return Path(tensor_dir) / (sample.stem + TENSOR_SUFFIX)


def evaluate(split_path, tensor_dir, partition="test"):
    """Fit nearest-centroid on ``train``; return ``(report, confusion, train_accuracy)``."""
    split = read_manifest(split_path)
    needed = split.train + split.partitions()[partition]
    missing = [str(_tensor_path(tensor_dir, s)) for s in needed if not _tensor_path(tensor_dir, s).exists()]
    if missing:
        raise FileNotFoundError("tensors listed in the manifest are missing:\n  " + "\n  ".join(missing))
    if not split.train:
        raise InvalidParameterError("train partition is empty")
    classes = class_order(s.label for s in split.train + split.val + split.test)
    model = centroid_fit(((read_tensor(_tensor_path(tensor_dir, s))[0], s.label) for s in split.train),
                         classes=[c for c in classes if any(s.label == c for s in split.train)])

    def predict_all(samples):
        return [centroid_predict(model, read_tensor(_tensor_path(tensor_dir, s))[0]) for s in samples]

    test = split.partitions()[partition]
    cm = confusion([s.label for s in test], predict_all(test), classes)
    report = metrics(cm)
    train_cm = confusion([s.label for s in split.train], predict_all(split.train), classes)
    return report, cm, metrics(train_cm).accuracy


__all__ = [
    "AMBIENT_LABEL",
    "Representation",
    "compute_representation",
    "evaluate",
    "plan_samples",
    "process_corpus",
    "split_manifest",
]
