"""Annotation-centred excerpts, 10 s sampling, ambient sampling and splitting."""

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, RecordingTooShortError

DEFAULT_LABELS = ("BW", "SW", "FW", "NN", "AB")
AMBIENT_LABEL = "AB"
PARTITIONS = ("train", "val", "test")


@dataclass(frozen=True)
class Annotation:
    recording_id: str
    t_start: float
    t_end: float
    f_lo: float
    f_hi: float
    label: str

    def __post_init__(self):
        if not 0 <= self.t_start < self.t_end:
            raise InvalidParameterError(
                f"annotation needs 0 <= t_start < t_end, got [{self.t_start}, {self.t_end}]"
            )
        if not self.f_lo < self.f_hi:
            raise InvalidParameterError(f"annotation needs f_lo < f_hi, got [{self.f_lo}, {self.f_hi}]")

    @property
    def duration(self):
        return self.t_end - self.t_start

    @property
    def midpoint(self):
        return 0.5 * (self.t_start + self.t_end)


@dataclass(frozen=True)
class LabeledSample:
    recording_id: str
    sample_start: float
    label: str
    rng_seed_used: int
    sample_len: float = 10.0
    source_annotation: Optional[Annotation] = None

    @property
    def sample_end(self):
        return self.sample_start + self.sample_len

    @property
    def stem(self):
        """File-name friendly identifier, unique per (recording, start)."""
        return f"{self.recording_id}_{int(round(self.sample_start * 1000)):09d}"


@dataclass
class DatasetSplit:
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)
    ratios: tuple = (0.70, 0.15, 0.15)

    def partitions(self):
        return {"train": self.train, "val": self.val, "test": self.test}

    def __len__(self):
        return len(self.train) + len(self.val) + len(self.test)


def derive_seed(master_seed, *parts):
    """Stable 63-bit seed from the master seed and an item key.

    Independent of iteration order, process and ``PYTHONHASHSEED``.
    """
    key = "\x1f".join(str(p) for p in (master_seed, *parts)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") >> 1


def _seeded(rng):
    """Return ``(seed, generator)``; a Generator argument is used to draw the seed."""
    if isinstance(rng, np.random.Generator):
        seed = int(rng.integers(0, 2**63 - 1))
    else:
        seed = int(rng)
    return seed, np.random.default_rng(seed)


def extract_excerpt(recording_len, anno, excerpt_len=30.0):
    """``(start, end)`` of an ``excerpt_len`` window centred on the annotation,
    shifted to stay inside the recording."""
    if recording_len < excerpt_len:
        raise RecordingTooShortError(
            f"recording is {recording_len} s, shorter than the {excerpt_len} s excerpt"
        )
    start = anno.midpoint - excerpt_len / 2
    start = min(max(start, 0.0), recording_len - excerpt_len)
    return start, start + excerpt_len


def containing_start_range(excerpt, anno, sample_len=10.0):
    """Feasible interval of sample starts for ``sample_containing``."""
    ex_lo, ex_hi = excerpt
    if ex_hi - ex_lo < sample_len:
        raise InvalidParameterError(f"excerpt {excerpt} is shorter than the {sample_len} s sample")
    last = ex_hi - sample_len
    if anno.duration <= sample_len:
        lo, hi = max(ex_lo, anno.t_end - sample_len), min(last, anno.t_start)
    else:
        # window lies inside the annotation
        lo, hi = max(ex_lo, anno.t_start), min(last, anno.t_end - sample_len)
    if lo > hi:
        # annotation sticks out of the excerpt; take the start closest to it
        lo = hi = min(max(anno.t_start, ex_lo), last)
    return lo, hi


def sample_containing(excerpt, anno, sample_len=10.0, rng=0):
    """Random ``sample_len`` window inside ``excerpt`` that contains the annotation.

    ``rng`` is an integer seed or a ``numpy.random.Generator``; the seed that
    reproduces the draw is stored in ``rng_seed_used``.
    """
    lo, hi = containing_start_range(excerpt, anno, sample_len)
    seed, gen = _seeded(rng)
    start = lo if hi == lo else float(gen.uniform(lo, hi))
    return LabeledSample(anno.recording_id, start, anno.label, seed, sample_len, anno)


def sample_ambient(recording_id, recording_len, sample_len=10.0, rng=0, label=AMBIENT_LABEL):
    if recording_len < sample_len:
        raise RecordingTooShortError(
            f"recording {recording_id!r} is {recording_len} s, shorter than the {sample_len} s sample"
        )
    seed, gen = _seeded(rng)
    span = recording_len - sample_len
    start = float(gen.uniform(0.0, span)) if span > 0 else 0.0
    return LabeledSample(recording_id, start, label, seed, sample_len, None)


def _largest_remainder(n, ratios):
    """Integer counts summing to ``n``; ties go to the later partition."""
    exact = [n * r for r in ratios]
    counts = [int(np.floor(e + 1e-9)) for e in exact]
    remainders = [e - c for e, c in zip(exact, counts)]
    order = sorted(range(len(ratios)), key=lambda i: (-round(remainders[i], 9), -i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def _check_ratios(ratios):
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidParameterError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    return ratios


def split_dataset(samples, ratios=(0.70, 0.15, 0.15), rng=0, stratified=True):
    """Shuffle and cut into train/val/test.

    Stratified by default: every label is cut separately with largest-remainder
    rounding, so each class deviates from the exact ratios by under one item.
    """
    ratios = _check_ratios(ratios)
    samples = list(samples)
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    if stratified:
        groups = {}
        for s in samples:
            groups.setdefault(s.label, []).append(s)
        groups = list(groups.values())
    else:
        groups = [samples]
    split = DatasetSplit(ratios=ratios)
    parts = (split.train, split.val, split.test)
    for group in groups:
        order = gen.permutation(len(group))
        counts = _largest_remainder(len(group), ratios)
        bounds = np.cumsum([0] + counts)
        for part, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            part.extend(group[i] for i in order[lo:hi])
    return split


def materialize_samples(annotations, recording_lengths, master_seed, sample_len=10.0, excerpt_len=30.0):
    """One sample per annotation, seeded by (master seed, recording, annotation index)."""
    per_recording = {}
    out = []
    for anno in annotations:
        index = per_recording.get(anno.recording_id, 0)
        per_recording[anno.recording_id] = index + 1
        excerpt = extract_excerpt(recording_lengths[anno.recording_id], anno, excerpt_len)
        seed = derive_seed(master_seed, anno.recording_id, index)
        out.append(sample_containing(excerpt, anno, sample_len, seed))
    return out


def ambient_samples(recording_lengths, master_seed, per_file=1, sample_len=10.0):
    out = []
    for rec_id, length in recording_lengths.items():
        for j in range(per_file):
            seed = derive_seed(master_seed, rec_id, "ambient", j)
            out.append(sample_ambient(rec_id, length, sample_len, seed))
    return out


class EpochSampler:
    """Draws fresh samples every epoch (resample-per-batch augmentation).

    Seeds depend on ``(master_seed, epoch, recording, index)`` only, so an
    epoch can be regenerated exactly.
    """

    def __init__(self, annotations, recording_lengths, master_seed, ambient_lengths=None,
                 sample_len=10.0, excerpt_len=30.0):
        self.annotations = list(annotations)
        self.recording_lengths = dict(recording_lengths)
        self.ambient_lengths = dict(ambient_lengths or {})
        self.master_seed = master_seed
        self.sample_len = sample_len
        self.excerpt_len = excerpt_len

    def epoch(self, n):
        seed = derive_seed(self.master_seed, "epoch", n)
        yield from materialize_samples(
            self.annotations, self.recording_lengths, seed, self.sample_len, self.excerpt_len
        )
        yield from ambient_samples(self.ambient_lengths, seed, 1, self.sample_len)

    def __iter__(self):
        n = 0
        while True:
            yield list(self.epoch(n))
            n += 1
