"""Desk-scale separability harness.

Builds an in-memory synthetic corpus, draws one 10 s sample per recording,
computes several representations of each sample, and scores a
nearest-centroid classifier per representation on a stratified split.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import DEFAULT_LABELS, derive_seed, extract_excerpt, sample_ambient, sample_containing, split_dataset
from .metrics import centroid_fit, centroid_predict, confusion, metrics
from .pipeline import Representation, compute_representation, run_parallel
from .synth import SynthCorpusConfig, corpus_items, recording_id, synth_recording


@dataclass
class SeparabilityResult:
    seed: int
    accuracy: dict = field(default_factory=dict)
    f1: dict = field(default_factory=dict)


def _sample_features(args):
    config, reps, label, index, sample_len = args
    buffer, anno = synth_recording(config, label, index)
    rec = recording_id(label, index)
    if anno is None:
        sample = sample_ambient(rec, buffer.duration, sample_len, derive_seed(config.master_seed, rec, "ambient", 0))
    else:
        excerpt = extract_excerpt(buffer.duration, anno)
        sample = sample_containing(excerpt, anno, sample_len, derive_seed(config.master_seed, rec, 0))
    clip = buffer.slice_seconds(sample.sample_start, sample_len)
    feats = [compute_representation(clip, r).values.astype(np.float32) for r in reps]
    return sample, feats


def separability(samples_per_class=200, seed=0, representations=("stacked", "linear:256"),
                 snr_db=20.0, recording_len=30.0, sample_len=10.0, workers=None):
    """Nearest-centroid test accuracy and macro-F1 for each representation."""
    reps = [Representation.parse(r) if isinstance(r, str) else r for r in representations]
    config = SynthCorpusConfig(
        counts={c: samples_per_class for c in DEFAULT_LABELS},
        recording_len=recording_len,
        snr_db=snr_db,
        master_seed=seed,
    )
    workers = workers or os.cpu_count() or 1
    items = [(config, reps, label, i, sample_len) for label, i in corpus_items(config)]
    chunks = [items[i::workers] for i in range(workers)] if workers > 1 else [items]
    results = run_parallel(_features_chunk, chunks, workers)
    # interleaved chunks -> restore the original item order
    ordered = [None] * len(items)
    for w, chunk in enumerate(results):
        for j, pair in enumerate(chunk):
            ordered[w + j * max(workers, 1)] = pair
    samples = [s for s, _ in ordered]
    position = {id(s): i for i, s in enumerate(samples)}
    split = split_dataset(samples, rng=seed)
    classes = tuple(c for c in DEFAULT_LABELS if c in config.counts)

    out = SeparabilityResult(seed)
    for r_i, rep in enumerate(reps):
        def feats(s):
            return ordered[position[id(s)]][1][r_i]

        model = centroid_fit(((feats(s), s.label) for s in split.train), classes=classes)
        predicted = [centroid_predict(model, feats(s)) for s in split.test]
        report = metrics(confusion([s.label for s in split.test], predicted, classes))
        out.accuracy[str(rep)] = report.accuracy
        out.f1[str(rep)] = report.f1
    return out


def _features_chunk(chunk):
    return [_sample_features(args) for args in chunk]

