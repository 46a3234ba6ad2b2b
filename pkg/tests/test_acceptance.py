"""The ten acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import hashlib
from collections import Counter

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import bilinear_grid
from specstack.cli import main
from specstack.dataset import (
    Annotation,
    LabeledSample,
    derive_seed,
    extract_excerpt,
    sample_ambient,
    sample_containing,
    split_dataset,
)
from specstack.dsp import AudioBuffer, Spectrogram, StftParams
from specstack.experiment import separability
from specstack.fft import fft_rows
from specstack.formats import (
    decode_tensor,
    encode_tensor,
    read_manifest,
    read_wav,
    write_manifest,
)
from specstack.mel import hz_to_mel, mel_to_hz
from specstack.metrics import ConfusionMatrix, confusion, metrics
from specstack.stacker import StackedTensor, StackParams, channel_spectrograms, interpolate_to_grid, stack_representation

LABELS = ("BW", "SW", "FW", "NN", "AB")


def check(number, name, passed, detail):
    ACCEPTANCE[number] = (bool(passed), name, detail)
    assert passed, f"C{number} {name}: {detail}"


def tree_digest(root, exclude=()):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name not in exclude:
            h.update(str(p.relative_to(root)).encode() + b"\0")
            h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()


def test_c1_fft_oracle(rng):
    worst_err, worst_parseval = 0.0, 0.0
    for n in (2, 8, 64, 1024, 4096):
        x = rng.standard_normal((200, n)) + 1j * rng.standard_normal((200, n))
        k = np.arange(n)
        # exact integer phase reduction keeps the oracle itself accurate at n = 4096
        dft = np.exp(-2j * np.pi * (np.outer(k, k) % n) / n)
        ref = x @ dft.T
        got = fft_rows(x)
        err = np.max(np.abs(got - ref), axis=1) / np.max(np.abs(ref), axis=1)
        energy = np.sum(np.abs(x) ** 2, axis=1)
        parseval = np.abs(np.sum(np.abs(got) ** 2, axis=1) / n - energy) / energy
        worst_err = max(worst_err, err.max())
        worst_parseval = max(worst_parseval, parseval.max())
    check(1, "FFT oracle equivalence", worst_err <= 1e-6 and worst_parseval <= 1e-6,
          f"max rel err {worst_err:.2e}, Parseval {worst_parseval:.2e} (limit 1e-6)")


def test_c2_mel_formula():
    m1000 = hz_to_mel(1000.0)
    zero = hz_to_mel(0.0)
    freqs = np.linspace(10.0, 1000.0, 2001)
    round_trip = np.max(np.abs(mel_to_hz(hz_to_mel(freqs)) - freqs) / freqs)
    check(2, "mel formula", abs(m1000 - 999.99) <= 0.01 and zero == 0.0 and round_trip <= 1e-9,
          f"hz_to_mel(1000)={m1000:.4f}, hz_to_mel(0)={zero}, round-trip {round_trip:.1e}")


def _spec(values, freq, time):
    return Spectrogram(values, freq, time, StftParams(4, 1), 8000.0)


def test_c3_interpolation_oracle(rng):
    worst, worst_identity, overshoot = 0.0, 0.0, False
    for _ in range(100):
        h, w = rng.integers(2, 12, 2)
        freq = np.cumsum(rng.uniform(0.1, 10, h))
        time = np.cumsum(rng.uniform(0.01, 1, w))
        values = rng.uniform(-120, 40, (h, w))
        spec = _spec(values, freq, time)
        tf = np.sort(rng.uniform(freq[0] - 5, freq[-1] + 5, rng.integers(2, 20)))
        tt = np.sort(rng.uniform(time[0] - 1, time[-1] + 1, rng.integers(2, 20)))
        out = interpolate_to_grid(spec, tf, tt)
        worst = max(worst, np.max(np.abs(out - bilinear_grid(values, freq, time, tf, tt))))
        identity = interpolate_to_grid(spec, freq, time)
        worst_identity = max(worst_identity, np.max(np.abs(identity - values)))
        overshoot |= out.min() < values.min() or out.max() > values.max()
    check(3, "interpolation oracle", worst <= 1e-9 and worst_identity <= 1e-12 and not overshoot,
          f"max err {worst:.1e}, identity {worst_identity:.1e}, overshoot={overshoot}")


def test_c4_standard_shape(rng):
    params = StackParams.standard()
    shapes, frames = set(), set()
    for seed in range(5):
        sig = AudioBuffer(np.random.default_rng(seed).standard_normal(80000) * 0.1, 8000.0)
        shapes.add(stack_representation(sig, params).values.shape)
        frames.add(tuple(s.values.shape[1] for s in channel_spectrograms(sig, params)))
    check(4, "standard configuration shape", shapes == {(3, 256, 128)} and frames == {(1247, 153, 16)},
          f"tensor shapes {sorted(shapes)}, frames per channel {sorted(frames)}")


def test_c5_pipeline_determinism(tmp_path):
    counts = "BW=4,SW=4,FW=4,NN=4,AB=4"
    digests = {}
    for run, workers in (("a", 1), ("b", 8), ("c", 1)):
        corpus, out = tmp_path / f"corpus_{run}", tmp_path / f"out_{run}"
        assert main(["synth", "--out", str(corpus), "--counts", counts, "--recording-len", "30",
                     "--seed", "11", "--workers", str(workers)]) == 0
        assert main(["process", "--corpus", str(corpus), "--out", str(out), "--seed", "5",
                     "--workers", str(workers)]) == 0
        digests[run] = (tree_digest(corpus), tree_digest(out))
    n = len(list((tmp_path / "out_a" / "tensors").glob("*.sst")))
    same = digests["a"] == digests["b"] == digests["c"]
    check(5, "pipeline determinism", same and n == 20,
          f"{n} tensors; SHA-256 equal across runs and workers 1/8: {same}")


def test_c6_split_fidelity(tmp_path):
    # skewed class proportions scaled to 5000 event samples plus 5000 ambient
    counts = {"BW": 623, "SW": 394, "FW": 3502, "NN": 481, "AB": 5000}
    samples = [
        LabeledSample(f"{label}_{i:05d}", float(i % 50), label, derive_seed(0, label, i))
        for label, n in counts.items() for i in range(n)
    ]
    split = split_dataset(samples, rng=2024)
    write_manifest(split, tmp_path / "split.csv")
    back = read_manifest(tmp_path / "split.csv")
    worst, ab_error = 0.0, 0.0
    for part, ratio in zip(back.partitions().values(), back.ratios):
        got = Counter(s.label for s in part)
        worst = max(worst, *(abs(got[c] - counts[c] * ratio) for c in counts))
        ab_error = max(ab_error, abs(got["AB"] / len(part) - 0.5))
    ok = back == split and worst <= 1 and ab_error <= 0.001
    check(6, "split fidelity", ok,
          f"max per-class deviation {worst:.2f} items, max AB share error {100 * ab_error:.3f} points")


@pytest.mark.slow
def test_c7_representation_separability():
    results = [separability(200, seed) for seed in range(5)]
    stacked = float(np.mean([r.accuracy["stacked"] for r in results]))
    linear = float(np.mean([r.accuracy["linear:256"] for r in results]))
    per_seed = ", ".join(f"{r.accuracy['stacked']:.3f}/{r.accuracy['linear:256']:.3f}" for r in results)
    check(7, "representation separability", stacked >= 0.80 and stacked >= linear,
          f"mean accuracy stacked {stacked:.3f} vs linear:256 {linear:.3f} (per seed {per_seed})")


def test_c8_metrics(rng):
    perfect = all(
        metrics(confusion(y, y, LABELS)).accuracy == 1.0 == metrics(confusion(y, y, LABELS)).f1
        for y in (list(rng.choice(LABELS, rng.integers(1, 200))) for _ in range(100))
    )
    rep = metrics(ConfusionMatrix(np.array([[8, 2], [3, 7]]), ("0", "1")))
    binary = rep.accuracy == 0.75 and abs(rep.per_class["0"]["precision"] - 8 / 11) <= 1e-15
    worst = 0.0
    for _ in range(100):
        n = rng.integers(1, 300)
        cm = confusion(rng.choice(LABELS, n), rng.choice(LABELS, n), LABELS)
        sums = cm.normalized().sum(axis=1)
        worst = max(worst, np.max(np.abs(sums[cm.counts.sum(axis=1) > 0] - 1.0)))
    check(8, "metrics correctness", perfect and binary and worst <= 1e-9,
          f"self-agreement {perfect}, [[8,2],[3,7]] accuracy {rep.accuracy} precision0 "
          f"{rep.per_class['0']['precision']:.6f}, row-sum error {worst:.1e}")


def test_c9_format_round_trips(rng, tmp_path, data_dir):
    tensors_ok = True
    for i in range(100):
        k, h, w = rng.integers(1, 5), rng.integers(2, 40), rng.integers(2, 40)
        values = (rng.standard_normal((k, h, w)) * 10 ** rng.uniform(-3, 3)).astype(np.float32)
        z = StackedTensor(values, np.linspace(*np.sort(rng.uniform(0, 4000, 2)), h),
                          np.linspace(*np.sort(rng.uniform(0, 60, 2)), w))
        label = str(rng.choice(LABELS)) + "é" * int(rng.integers(0, 3))
        raw = encode_tensor(z, label)
        back, back_label = decode_tensor(raw)
        tensors_ok &= back.values.tobytes() == values.tobytes() and back_label == label
        tensors_ok &= encode_tensor(back, back_label) == raw

    manifests_ok = True
    for i in range(100):
        samples = []
        for j in range(int(rng.integers(0, 30))):
            label = str(rng.choice(LABELS))
            start = float(rng.uniform(0, 600))
            anno = None if label == "AB" else Annotation(
                f"r{j}", start + rng.uniform(0, 5), start + 5 + rng.uniform(0, 5),
                float(rng.uniform(1, 50)), float(rng.uniform(60, 900)), label)
            samples.append(LabeledSample(f"r{j}", start, label, int(rng.integers(0, 2**63 - 1)), 10.0, anno))
        split = split_dataset(samples, rng=i)
        path = tmp_path / f"m{i}.csv"
        write_manifest(split, path)
        manifests_ok &= read_manifest(path) == split

    golden = read_wav(data_dir / "golden_pcm16_4.wav")
    golden_ok = golden.sample_rate_hz == 8000.0 and np.array_equal(
        golden.samples, [0.0, 0.5, -1.0, 0.999969482421875])
    check(9, "format round-trips", tensors_ok and manifests_ok and golden_ok,
          f"SST1 bit-exact {tensors_ok}, manifest lossless {manifests_ok}, golden WAV {golden_ok}")


def test_c10_sampling_containment(rng):
    contained = True
    for seed in range(10_000):
        r = np.random.default_rng(seed)
        t0 = float(r.uniform(0, 590))
        anno = Annotation("rec", t0, t0 + float(r.uniform(0.01, 10.0)), 10.0, 20.0, "FW")
        s = sample_containing(extract_excerpt(600.0, anno), anno, rng=derive_seed(seed, "c10"))
        contained &= s.sample_start <= anno.t_start and s.sample_end >= anno.t_end
    starts = np.array([sample_ambient("amb", 610.0, rng=derive_seed(1, "amb", j)).sample_start
                       for j in range(10_000)])
    sigma = 600.0 / np.sqrt(12) / np.sqrt(len(starts))
    z = abs(starts.mean() - 300.0) / sigma
    check(10, "sampling containment", contained and z <= 3,
          f"all 10^4 windows contain their annotation: {contained}; ambient mean {starts.mean():.2f} "
          f"({z:.2f} sigma from 300)")
