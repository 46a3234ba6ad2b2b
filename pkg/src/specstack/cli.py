"""Command line interface: ``specstack {synth,process,split,eval,inspect,bench}``.

Settings come from defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags (flags win).

Exit codes: 0 success, 1 partial failure, 2 invalid configuration or input.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidParameterError, SpecStackError

log = logging.getLogger("specstack")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "representation": "stacked",
    "counts": "BW=10,SW=10,FW=10,NN=10,AB=10",
    "recording_len": 60.0,
    "sample_rate": 8000.0,
    "snr_db": 20.0,
    "noise_color": "pink",
    "sample_len": 10.0,
    "excerpt_len": 30.0,
    "ambient_per_file": 1,
    "ratios": "0.70,0.15,0.15",
    "stratified": True,
    "partition": "test",
    "channel": 0,
    "bench_samples": 6,
}


class ConfigError(SpecStackError):
    pass


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _counts(value):
    out = {}
    for part in str(value).split(","):
        label, sep, n = part.partition("=")
        if not sep:
            raise ConfigError(f"counts must look like BW=10,SW=10,..., got {value!r}")
        out[label.strip()] = int(n)
    return out


def _ratios(value):
    try:
        return tuple(float(v) for v in str(value).split(","))
    except ValueError:
        raise ConfigError(f"bad ratios {value!r}") from None


class Settings:
    """Merged view of defaults, config file and flags, with typed getters."""

    def __init__(self, args):
        self.values = dict(DEFAULTS)
        if getattr(args, "config", None):
            self.values.update(read_config(args.config))
        for key, value in vars(args).items():
            if value is not None and key not in ("command", "config", "func", "verbose"):
                self.values[key] = value

    def get(self, key, cast=str, required=False):
        value = self.values.get(key)
        if value is None:
            if required:
                raise ConfigError(f"missing required setting {key!r} (flag --{key.replace('_', '-')})")
            return None
        try:
            return cast(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None


def _pool_map(workers):
    if workers <= 1:
        return map, None
    from .pipeline import process_pool

    pool = process_pool(workers)
    return pool.map, pool


def cmd_synth(s):
    from .synth import SynthCorpusConfig, build_synthetic_corpus

    config = SynthCorpusConfig(
        counts=s.get("counts", _counts),
        recording_len=s.get("recording_len", float),
        sample_rate_hz=s.get("sample_rate", float),
        ambient_noise_color=s.get("noise_color"),
        snr_db=s.get("snr_db", float),
        master_seed=s.get("seed", int),
    )
    out = Path(s.get("out", required=True))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    map_fn, pool = _pool_map(s.get("workers", int))
    try:
        paths, annotations = build_synthetic_corpus(config, out, map_fn)
    finally:
        if pool is not None:
            pool.shutdown()
    print(f"wrote {len(paths)} recordings and {len(annotations)} annotations to {out}")
    for label, n in config.counts.items():
        print(f"  {label}: {n}")
    return EXIT_OK


def cmd_process(s):
    from .pipeline import Representation, process_corpus

    rep = Representation.parse(s.get("representation"))
    failures = process_corpus(
        s.get("corpus", required=True),
        s.get("out", required=True),
        rep,
        master_seed=s.get("seed", int),
        workers=s.get("workers", int),
        sample_len=s.get("sample_len", float),
        excerpt_len=s.get("excerpt_len", float),
        ambient_per_file=s.get("ambient_per_file", int),
    )
    out = Path(s.get("out"))
    n = sum(1 for _ in (out / "tensors").glob("*.sst"))
    print(f"representation {rep}: {n} tensors in {out / 'tensors'}, manifest {out / 'manifest.csv'}")
    if failures:
        print(f"{len(failures)} samples failed; see {out / 'failures.csv'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_split(s):
    from .pipeline import split_manifest

    manifest = Path(s.get("manifest", required=True))
    out = Path(s.get("out") or manifest.with_name("split.csv"))
    split = split_manifest(manifest, out, s.get("ratios", _ratios), s.get("seed", int), s.get("stratified", _bool))
    for name, part in split.partitions().items():
        labels, counts = np.unique([x.label for x in part], return_counts=True) if part else ([], [])
        dist = ", ".join(f"{label}={c}" for label, c in zip(labels, counts))
        print(f"{name:<6}{len(part):>7}  {dist}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_eval(s):
    from .pipeline import evaluate

    manifest = Path(s.get("manifest", required=True))
    tensors = Path(s.get("tensors") or manifest.parent / "tensors")
    out = Path(s.get("out") or manifest.parent / "eval")
    report, cm, train_acc = evaluate(manifest, tensors, s.get("partition"))
    out.mkdir(parents=True, exist_ok=True)
    header = f"seed={s.get('seed', int)} partition={s.get('partition')} averaging={report.averaging}\n"
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "report.txt").write_text(header + report.to_text() + "\n", encoding="utf-8")
    (out / "confusion.txt").write_text(cm.to_text(False) + "\n\n" + cm.to_text(True) + "\n", encoding="utf-8")
    (out / "confusion.ppm").write_bytes(cm.to_ppm())
    print(report.to_text())
    print()
    print(cm.to_text(True))
    log.info("train-partition accuracy %.4f (optimistic)", train_acc)
    return EXIT_OK


def render_channel(values):
    """Min-max scaled greyscale image, highest frequency in the top row."""
    from .dsp import minmax_normalize

    return np.round(minmax_normalize(values)[::-1] * 255).astype(np.uint8)


def cmd_inspect(s):
    from .formats import read_tensor
    from .metrics import encode_ppm

    path = Path(s.get("tensor", required=True))
    tensor, label = read_tensor(path)
    channel = s.get("channel", int)
    k = tensor.values.shape[0]
    if not 0 <= channel < k:
        raise InvalidParameterError(f"channel {channel} out of range for a {k}-channel tensor")
    values = tensor.values[channel]
    out = Path(s.get("out") or f"{path.stem}.ch{channel}.ppm")
    out.write_bytes(encode_ppm(render_channel(values)))
    print(f"{path.name}: label={label} shape={tensor.values.shape}")
    print(f"channel {channel}: min={values.min():.2f} dB max={values.max():.2f} dB mean={values.mean():.2f} dB")
    print(f"image {values.shape[1]}x{values.shape[0]} -> {out}")
    return EXIT_OK


def cmd_bench(s):
    from .bench import run_benchmark

    for line in run_benchmark(n_samples=s.get("bench_samples", int), seed=s.get("seed", int)):
        print(line)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="specstack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *flags):
        sp.add_argument("--config", help="key = value settings file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out")
        for flag, kw in flags:
            sp.add_argument(flag, **kw)
        return sp

    sp = common(sub.add_parser("synth", help="generate a synthetic labelled corpus"),
                ("--counts", {"help": "e.g. BW=10,SW=10,FW=10,NN=10,AB=10"}),
                ("--recording-len", {"type": float, "dest": "recording_len"}),
                ("--snr-db", {"type": float, "dest": "snr_db"}),
                ("--noise-color", {"choices": ["white", "pink"], "dest": "noise_color"}))
    sp.set_defaults(func=cmd_synth)

    sp = common(sub.add_parser("process", help="sample recordings and write tensors + manifest"),
                ("--corpus", {}),
                ("--representation", {"help": "stacked | linear:<nfft> | mel"}),
                ("--sample-len", {"type": float, "dest": "sample_len"}),
                ("--excerpt-len", {"type": float, "dest": "excerpt_len"}),
                ("--ambient-per-file", {"type": int, "dest": "ambient_per_file"}))
    sp.set_defaults(func=cmd_process)

    sp = common(sub.add_parser("split", help="stratified train/val/test split of a manifest"),
                ("--manifest", {}),
                ("--ratios", {"help": "e.g. 0.70,0.15,0.15"}),
                ("--unstratified", {"action": "store_const", "const": False, "dest": "stratified"}))
    sp.set_defaults(func=cmd_split)

    sp = common(sub.add_parser("eval", help="nearest-centroid evaluation of a split manifest"),
                ("--manifest", {}),
                ("--tensors", {}),
                ("--partition", {"choices": ["val", "test"]}))
    sp.set_defaults(func=cmd_eval)

    sp = common(sub.add_parser("inspect", help="render one tensor channel as a PPM image"),
                ("tensor", {}),
                ("--channel", {"type": int}))
    sp.set_defaults(func=cmd_inspect)

    sp = common(sub.add_parser("bench", help="compare numba and numpy kernel backends"),
                ("--samples", {"type": int, "dest": "bench_samples"}))
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(Settings(args))
    except (ConfigError, InvalidParameterError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, SpecStackError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
