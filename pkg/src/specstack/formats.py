"""On-disk formats: RIFF/WAVE audio, annotation CSV, SST1 tensors, manifest CSV.

SST1 layout (all little-endian)::

    offset  size  field
    0       4     magic b"SST1"
    4       4     k        (uint32)
    8       4     H        (uint32)
    12      4     W        (uint32)
    16      1     dtype    (uint8, 0 = float32)
    17      4     n        (uint32, byte length of the label)
    21      n     label    (UTF-8)
    21+n    32    f_lo, f_hi, t_lo, t_hi (float64 each)
    53+n    ...   k*H*W float32 values, channel-major, then frequency row, then time column
"""

import csv
import io
import logging
import struct
from pathlib import Path

import numpy as np

from .dataset import PARTITIONS, Annotation, DatasetSplit, LabeledSample
from .dsp import AudioBuffer
from .errors import (
    DtypeMismatchError,
    InvalidParameterError,
    LengthMismatchError,
    MagicMismatchError,
    RowError,
    UnsupportedFormatError,
    WavParseError,
)
from .stacker import StackedTensor

log = logging.getLogger(__name__)

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

SST_MAGIC = b"SST1"
SST_DTYPE_F32 = 0
_SST_HEAD = struct.Struct("<4sIIIB")
_SST_RANGES = struct.Struct("<4d")

ANNOTATION_HEADER = ("recording_id", "t_start", "t_end", "f_lo", "f_hi", "label")
MANIFEST_HEADER = (
    "partition", "recording_id", "label", "sample_start", "sample_len", "rng_seed_used",
    "anno_t_start", "anno_t_end", "anno_f_lo", "anno_f_hi",
)
UNSPLIT = "unsplit"


# -- WAV ---------------------------------------------------------------------

def _parse_fmt(body, offset):
    if len(body) < 16:
        raise WavParseError(f"fmt chunk is {len(body)} bytes, need at least 16", offset)
    fmt_tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", body)
    if fmt_tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise WavParseError("WAVE_FORMAT_EXTENSIBLE fmt chunk shorter than 40 bytes", offset)
        fmt_tag = struct.unpack_from("<H", body, 24)[0]
    if channels < 1 or rate < 1:
        raise WavParseError(f"invalid channel count {channels} or sample rate {rate}", offset)
    if (fmt_tag, bits) == (WAVE_FORMAT_PCM, 16):
        dtype = np.dtype("<i2")
    elif (fmt_tag, bits) == (WAVE_FORMAT_IEEE_FLOAT, 32):
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedFormatError(
            f"unsupported WAV encoding: format tag {fmt_tag:#06x}, {bits} bits per sample"
        )
    if block_align != channels * dtype.itemsize:
        raise WavParseError(f"block_align {block_align} inconsistent with {channels}x{bits} bit", offset)
    return dtype, channels, rate


def parse_wav(data):
    """Decode WAV bytes into an :class:`AudioBuffer` (channel 0 only)."""
    if len(data) < 12:
        raise WavParseError(f"file is {len(data)} bytes, too short for a RIFF header", 0)
    riff, _, wave = struct.unpack_from("<4sI4s", data)
    if riff != b"RIFF":
        raise WavParseError(f"expected 'RIFF', found {riff!r}", 0)
    if wave != b"WAVE":
        raise WavParseError(f"expected 'WAVE', found {wave!r}", 8)

    fmt = None
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise WavParseError("truncated chunk header", pos)
        chunk_id, size = struct.unpack_from("<4sI", data, pos)
        body_at = pos + 8
        if chunk_id == b"fmt ":
            if body_at + size > len(data):
                raise WavParseError(f"fmt chunk declares {size} bytes, file ends first", body_at)
            fmt = _parse_fmt(data[body_at : body_at + size], body_at)
        elif chunk_id == b"data":
            if fmt is None:
                raise WavParseError("data chunk before fmt chunk", pos)
            available = len(data) - body_at
            if size > available:
                raise WavParseError(
                    f"data chunk declares {size} bytes but only {available} remain "
                    f"(short by {size - available})",
                    body_at,
                )
            dtype, channels, rate = fmt
            frame = dtype.itemsize * channels
            if size % frame:
                raise WavParseError(f"data size {size} is not a multiple of the {frame}-byte frame", body_at)
            raw = np.frombuffer(data, dtype=dtype, count=size // dtype.itemsize, offset=body_at)
            if channels > 1:
                log.warning("WAV has %d channels; using channel 0", channels)
                raw = raw[::channels]
            if dtype.kind == "i":
                samples = raw.astype(np.float64) / 32768.0
            else:
                samples = raw.astype(np.float64)
            return AudioBuffer(samples, float(rate))
        pos = body_at + size + (size & 1)
    if fmt is None:
        raise WavParseError("no fmt chunk found", 12)
    raise WavParseError("no data chunk found", len(data))


def read_wav(path):
    return parse_wav(Path(path).read_bytes())


def encode_wav(buffer, sample_format="pcm16"):
    rate = int(round(buffer.sample_rate_hz))
    if sample_format == "pcm16":
        ints = np.round(np.clip(buffer.samples, -1.0, 32767 / 32768) * 32768.0)
        payload = ints.astype("<i2").tobytes()
        fmt_tag, bits = WAVE_FORMAT_PCM, 16
    elif sample_format == "float32":
        payload = buffer.samples.astype("<f4").tobytes()
        fmt_tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise InvalidParameterError(f"unknown sample format {sample_format!r}")
    block = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, fmt_tag, 1, rate, rate * block, block, bits,
        b"data", len(payload),
    )
    return header + payload


def write_wav(path, buffer, sample_format="pcm16"):
    Path(path).write_bytes(encode_wav(buffer, sample_format))


# -- annotations -------------------------------------------------------------

def _float(value, name, line):
    try:
        return float(value)
    except ValueError:
        raise RowError(f"{name} is not a number: {value!r}", line) from None


def read_annotations(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise RowError("missing header", 1)
    if tuple(c.strip() for c in rows[0]) != ANNOTATION_HEADER:
        raise RowError(f"header must be {','.join(ANNOTATION_HEADER)}", 1)
    out = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(ANNOTATION_HEADER):
            raise RowError(f"expected {len(ANNOTATION_HEADER)} fields, got {len(row)}", line)
        rec, t0, t1, f0, f1, label = (c.strip() for c in row)
        try:
            out.append(Annotation(
                rec, _float(t0, "t_start", line), _float(t1, "t_end", line),
                _float(f0, "f_lo", line), _float(f1, "f_hi", line), label,
            ))
        except InvalidParameterError as exc:
            raise RowError(str(exc), line) from None
    return out


def write_annotations(annotations, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANNOTATION_HEADER)
        for a in annotations:
            w.writerow([a.recording_id, repr(a.t_start), repr(a.t_end), repr(a.f_lo), repr(a.f_hi), a.label])


# -- SST1 tensors ------------------------------------------------------------

def encode_tensor(tensor, label):
    values = np.asarray(tensor.values)
    if values.ndim != 3:
        raise InvalidParameterError(f"tensor must be k x H x W, got shape {values.shape}")
    k, h, w = values.shape
    name = label.encode("utf-8")
    f, t = tensor.grid_freq_axis, tensor.grid_time_axis
    return b"".join((
        _SST_HEAD.pack(SST_MAGIC, k, h, w, SST_DTYPE_F32),
        struct.pack("<I", len(name)),
        name,
        _SST_RANGES.pack(float(f[0]), float(f[-1]), float(t[0]), float(t[-1])),
        values.astype("<f4").tobytes(),
    ))


def decode_tensor(data):
    if len(data) < _SST_HEAD.size + 4:
        raise LengthMismatchError(f"{len(data)} bytes is too short for an SST1 header")
    magic, k, h, w, dtype = _SST_HEAD.unpack_from(data)
    if magic != SST_MAGIC:
        raise MagicMismatchError(f"bad magic {magic!r}, expected {SST_MAGIC!r}")
    if dtype != SST_DTYPE_F32:
        raise DtypeMismatchError(f"unsupported dtype code {dtype}, expected {SST_DTYPE_F32}")
    pos = _SST_HEAD.size
    (n,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if pos + n + _SST_RANGES.size > len(data):
        raise LengthMismatchError("header truncated inside label or axis ranges")
    label = data[pos : pos + n].decode("utf-8")
    pos += n
    f_lo, f_hi, t_lo, t_hi = _SST_RANGES.unpack_from(data, pos)
    pos += _SST_RANGES.size
    expected = k * h * w * 4
    if len(data) - pos != expected:
        raise LengthMismatchError(f"payload is {len(data) - pos} bytes, header implies {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=pos).reshape(k, h, w).astype(np.float32)
    tensor = StackedTensor(values, np.linspace(f_lo, f_hi, h), np.linspace(t_lo, t_hi, w))
    return tensor, label


def write_tensor(tensor, label, path):
    """Values are stored as float32."""
    Path(path).write_bytes(encode_tensor(tensor, label))


def read_tensor(path):
    return decode_tensor(Path(path).read_bytes())


# -- manifest ----------------------------------------------------------------

def _manifest_row(partition, s):
    a = s.source_annotation
    anno = [repr(a.t_start), repr(a.t_end), repr(a.f_lo), repr(a.f_hi)] if a else ["", "", "", ""]
    return [partition, s.recording_id, s.label, repr(s.sample_start), repr(s.sample_len), str(s.rng_seed_used), *anno]


def _dump_manifest(records, path, ratios=None):
    buf = io.StringIO()
    if ratios is not None:
        buf.write("# ratios=" + ",".join(repr(r) for r in ratios) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for partition, s in records:
        w.writerow(_manifest_row(partition, s))
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_manifest(split, path):
    records = [(name, s) for name, part in split.partitions().items() for s in part]
    _dump_manifest(records, path, split.ratios)


def write_sample_manifest(samples, path):
    """Manifest of samples not yet assigned to partitions."""
    _dump_manifest([(UNSPLIT, s) for s in samples], path)


def read_manifest_records(path):
    """``(ratios or None, [(partition, LabeledSample), ...])`` with schema checks."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    ratios = None
    start = 0
    if lines and lines[0].startswith("#"):
        key, _, value = lines[0][1:].strip().partition("=")
        if key.strip() != "ratios":
            raise RowError(f"unknown directive {key.strip()!r}", 1)
        try:
            ratios = tuple(float(v) for v in value.split(","))
        except ValueError:
            raise RowError(f"bad ratios {value!r}", 1) from None
        start = 1
    rows = list(csv.reader(lines[start:]))
    if not rows or tuple(rows[0]) != MANIFEST_HEADER:
        raise RowError(f"header must be {','.join(MANIFEST_HEADER)}", start + 1)
    records = []
    seen = set()
    for line, row in enumerate(rows[1:], start=start + 2):
        if len(row) != len(MANIFEST_HEADER):
            raise RowError(f"expected {len(MANIFEST_HEADER)} fields, got {len(row)}", line)
        part, rec, label, t0, length, seed, a0, a1, f0, f1 = row
        if part not in PARTITIONS and part != UNSPLIT:
            raise RowError(f"unknown partition {part!r}", line)
        try:
            seed = int(seed)
        except ValueError:
            raise RowError(f"rng_seed_used is not an integer: {seed!r}", line) from None
        anno = None
        if any((a0, a1, f0, f1)):
            try:
                anno = Annotation(rec, _float(a0, "anno_t_start", line), _float(a1, "anno_t_end", line),
                                  _float(f0, "anno_f_lo", line), _float(f1, "anno_f_hi", line), label)
            except InvalidParameterError as exc:
                raise RowError(str(exc), line) from None
        sample = LabeledSample(rec, _float(t0, "sample_start", line), label, seed,
                               _float(length, "sample_len", line), anno)
        key = (rec, sample.sample_start, part)
        if key in seen:
            raise RowError(f"duplicate sample {rec!r} at {sample.sample_start} in {part}", line)
        seen.add(key)
        records.append((part, sample))
    return ratios, records


def read_manifest(path):
    ratios, records = read_manifest_records(path)
    split = DatasetSplit(ratios=ratios if ratios is not None else DatasetSplit().ratios)
    parts = split.partitions()
    for line, (part, sample) in enumerate(records, start=2):
        if part == UNSPLIT:
            raise RowError("manifest has unsplit rows; run split first", line)
        parts[part].append(sample)
    return split


def read_sample_manifest(path):
    return [s for _, s in read_manifest_records(path)[1]]
