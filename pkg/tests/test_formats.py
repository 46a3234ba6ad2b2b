import logging
import struct

import numpy as np
import pytest

from specstack.dataset import Annotation, LabeledSample, split_dataset
from specstack.dsp import AudioBuffer
from specstack.errors import (
    DtypeMismatchError,
    FormatError,
    LengthMismatchError,
    MagicMismatchError,
    RowError,
    UnsupportedFormatError,
    WavParseError,
)
from specstack.formats import (
    decode_tensor,
    encode_tensor,
    encode_wav,
    parse_wav,
    read_annotations,
    read_manifest,
    read_sample_manifest,
    read_tensor,
    read_wav,
    write_annotations,
    write_manifest,
    write_sample_manifest,
    write_tensor,
)
from specstack.stacker import StackedTensor

SR = 8000


def wav_bytes(fmt_tag, channels, bits, payload, rate=SR, extensible=False, declared=None):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", 0xFFFE if extensible else fmt_tag, channels, rate, rate * block, block, bits)
    if extensible:
        fmt += struct.pack("<HHI", 22, bits, 0) + struct.pack("<H", fmt_tag) + bytes(14)
    size = len(payload) if declared is None else declared
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", size) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def tensor(rng, k=3, h=256, w=128):
    return StackedTensor(rng.standard_normal((k, h, w)).astype(np.float32),
                         np.linspace(10, 1000, h), np.linspace(1.024, 8.704, w))


class TestWav:
    def test_golden_file(self, data_dir):
        raw = (data_dir / "golden_pcm16_4.wav").read_bytes()
        assert len(raw) == 52
        buf = read_wav(data_dir / "golden_pcm16_4.wav")
        assert buf.sample_rate_hz == 8000.0
        np.testing.assert_array_equal(buf.samples, [0.0, 0.5, -1.0, 0.999969482421875])

    def test_scale(self):
        buf = parse_wav(wav_bytes(1, 1, 16, struct.pack("<h", 16384)))
        assert buf.samples[0] == 0.5

    def test_sample_rate_honoured(self):
        assert parse_wav(wav_bytes(1, 1, 16, bytes(4), rate=22050)).sample_rate_hz == 22050.0

    def test_float32(self):
        vals = np.array([0.25, -0.75, 1.0], "<f4")
        np.testing.assert_array_equal(parse_wav(wav_bytes(3, 1, 32, vals.tobytes())).samples, vals)

    def test_extensible(self):
        buf = parse_wav(wav_bytes(1, 1, 16, struct.pack("<2h", 1, -1), extensible=True))
        np.testing.assert_array_equal(buf.samples, [1 / 32768, -1 / 32768])

    def test_multichannel_takes_first(self, caplog):
        payload = struct.pack("<4h", 100, 200, 300, 400)
        with caplog.at_level(logging.WARNING):
            buf = parse_wav(wav_bytes(1, 2, 16, payload))
        np.testing.assert_array_equal(buf.samples, [100 / 32768, 300 / 32768])
        assert "channel" in caplog.text

    def test_truncated_payload(self):
        with pytest.raises(WavParseError) as info:
            parse_wav(wav_bytes(1, 1, 16, bytes(8), declared=20))
        assert "short by 12" in str(info.value) and info.value.offset == 44

    @pytest.mark.parametrize("fmt_tag,bits", [(1, 8), (1, 24), (3, 64), (0x55, 16)])
    def test_unsupported(self, fmt_tag, bits):
        with pytest.raises(UnsupportedFormatError):
            parse_wav(wav_bytes(fmt_tag, 1, bits, bytes(16)))

    def test_not_riff(self):
        with pytest.raises(WavParseError) as info:
            parse_wav(b"RIFX" + bytes(40))
        assert "offset 0" in str(info.value)

    def test_missing_data_chunk(self):
        raw = wav_bytes(1, 1, 16, b"")[:-8]
        with pytest.raises(WavParseError):
            parse_wav(raw)

    @pytest.mark.parametrize("fmt", ["pcm16", "float32"])
    def test_write_read(self, tmp_path, rng, fmt):
        x = rng.uniform(-1, 1, 1000)
        raw = encode_wav(AudioBuffer(x, SR), fmt)
        (tmp_path / "x.wav").write_bytes(raw)
        back = read_wav(tmp_path / "x.wav")
        tol = 1 / 32768 if fmt == "pcm16" else 1e-7
        np.testing.assert_allclose(back.samples, x, atol=tol)
        assert len(raw) == 44 + len(x) * (2 if fmt == "pcm16" else 4)

    def test_pcm_round_trip_is_exact_on_grid(self, rng):
        x = rng.integers(-32768, 32768, 500) / 32768
        assert np.array_equal(parse_wav(encode_wav(AudioBuffer(x, SR))).samples, x)

    def test_errors_share_base(self):
        assert issubclass(WavParseError, FormatError)


class TestAnnotations:
    HEADER = "recording_id,t_start,t_end,f_lo,f_hi,label\n"

    def test_parse(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text(self.HEADER + "rec1,100.0,104.0,15.0,25.0,BW\n")
        assert read_annotations(p) == [Annotation("rec1", 100.0, 104.0, 15.0, 25.0, "BW")]

    def test_header_only(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text(self.HEADER)
        assert read_annotations(p) == []

    def test_bad_time_order_reports_line(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text(self.HEADER + "r,1,2,10,20,BW\nr,5,5,10,20,BW\n")
        with pytest.raises(RowError) as info:
            read_annotations(p)
        assert info.value.line == 3 and "line 3" in str(info.value)

    @pytest.mark.parametrize("row", ["r,1,x,10,20,BW", "r,1,2,10,20", "r,1,2,30,20,BW"])
    def test_bad_rows(self, tmp_path, row):
        p = tmp_path / "a.csv"
        p.write_text(self.HEADER + row + "\n")
        with pytest.raises(RowError):
            read_annotations(p)

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("id,start,end,lo,hi,label\n")
        with pytest.raises(RowError):
            read_annotations(p)

    def test_unknown_label_passes(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text(self.HEADER + "r,1,2,10,20,HUMPBACK\n")
        assert read_annotations(p)[0].label == "HUMPBACK"

    def test_round_trip(self, tmp_path, rng):
        annos = [Annotation(f"r{i}", float(t), float(t) + 1.0 / 3, 10.1, 99.9, "SW")
                 for i, t in enumerate(rng.uniform(0, 100, 20))]
        write_annotations(annos, tmp_path / "a.csv")
        assert read_annotations(tmp_path / "a.csv") == annos


class TestTensor:
    def test_file_size(self, tmp_path, rng):
        write_tensor(tensor(rng), "BW", tmp_path / "x.sst")
        header = 4 + 12 + 1 + 4 + 2 + 32
        # 3*256*128 float32 values = 393216 payload bytes
        assert (tmp_path / "x.sst").stat().st_size == header + 3 * 256 * 128 * 4 == header + 393216

    def test_round_trip(self, tmp_path, rng):
        z = tensor(rng, 2, 5, 7)
        write_tensor(z, "NN é", tmp_path / "x.sst")
        back, label = read_tensor(tmp_path / "x.sst")
        assert label == "NN é"
        assert back.values.tobytes() == z.values.tobytes()
        np.testing.assert_allclose(back.grid_freq_axis, z.grid_freq_axis, rtol=1e-12)
        np.testing.assert_allclose(back.grid_time_axis, z.grid_time_axis, rtol=1e-12)

    def test_layout(self, rng):
        z = tensor(rng, 2, 3, 4)
        raw = encode_tensor(z, "AB")
        assert raw[:4] == b"SST1"
        assert struct.unpack_from("<IIIB", raw, 4) == (2, 3, 4, 0)
        assert struct.unpack_from("<I", raw, 17)[0] == 2 and raw[21:23] == b"AB"
        assert struct.unpack_from("<4d", raw, 23) == (10.0, 1000.0, 1.024, 8.704)
        payload = np.frombuffer(raw[55:], "<f4").reshape(2, 3, 4)
        assert np.array_equal(payload, z.values)

    def test_bad_magic(self, rng):
        raw = bytearray(encode_tensor(tensor(rng, 1, 2, 2), "x"))
        raw[:4] = b"XXXX"
        with pytest.raises(MagicMismatchError):
            decode_tensor(bytes(raw))

    def test_bad_dtype(self, rng):
        raw = bytearray(encode_tensor(tensor(rng, 1, 2, 2), "x"))
        raw[16] = 7
        with pytest.raises(DtypeMismatchError):
            decode_tensor(bytes(raw))

    @pytest.mark.parametrize("cut", [-1, -4, 10])
    def test_bad_length(self, rng, cut):
        raw = encode_tensor(tensor(rng, 1, 2, 2), "x")
        with pytest.raises(LengthMismatchError):
            decode_tensor(raw[:cut])
        with pytest.raises(LengthMismatchError):
            decode_tensor(raw + b"\0\0\0\0")

    def test_errors_are_distinct(self):
        kinds = {MagicMismatchError, DtypeMismatchError, LengthMismatchError}
        assert len(kinds) == 3 and all(issubclass(k, FormatError) for k in kinds)


def random_samples(rng, n):
    out = []
    for i in range(n):
        rec = f"rec{rng.integers(0, 5)}"
        start = float(rng.uniform(0, 600))
        if rng.random() < 0.5:
            out.append(LabeledSample(rec, start, "AB", int(rng.integers(0, 2**63 - 1))))
        else:
            a = Annotation(rec, start + 1.0, start + 3.7, 12.5, 30.25, "FW")
            out.append(LabeledSample(rec, start, "FW", int(rng.integers(0, 2**63 - 1)), 10.0, a))
    return out


class TestManifest:
    def test_round_trip(self, tmp_path, rng):
        split = split_dataset(random_samples(rng, 60), rng=1)
        write_manifest(split, tmp_path / "m.csv")
        back = read_manifest(tmp_path / "m.csv")
        assert back == split

    def test_custom_ratios_preserved(self, tmp_path, rng):
        split = split_dataset(random_samples(rng, 20), ratios=(0.6, 0.2, 0.2), rng=1)
        write_manifest(split, tmp_path / "m.csv")
        assert read_manifest(tmp_path / "m.csv").ratios == (0.6, 0.2, 0.2)

    def test_counts_recount(self, tmp_path, rng):
        split = split_dataset(random_samples(rng, 200), rng=2)
        write_manifest(split, tmp_path / "m.csv")
        back = read_manifest(tmp_path / "m.csv")
        for name, part in split.partitions().items():
            assert sorted(s.label for s in back.partitions()[name]) == sorted(s.label for s in part)

    def test_unsplit_manifest(self, tmp_path, rng):
        samples = random_samples(rng, 10)
        write_sample_manifest(samples, tmp_path / "m.csv")
        assert read_sample_manifest(tmp_path / "m.csv") == samples
        with pytest.raises(RowError):
            read_manifest(tmp_path / "m.csv")

    def test_duplicate_rows(self, tmp_path, rng):
        samples = random_samples(rng, 3)
        write_sample_manifest(samples + samples[:1], tmp_path / "m.csv")
        with pytest.raises(RowError) as info:
            read_sample_manifest(tmp_path / "m.csv")
        assert info.value.line == 5

    def test_bad_partition(self, tmp_path, rng):
        write_sample_manifest(random_samples(rng, 2), tmp_path / "m.csv")
        text = (tmp_path / "m.csv").read_text().replace("unsplit", "holdout", 1)
        (tmp_path / "m.csv").write_text(text)
        with pytest.raises(RowError):
            read_sample_manifest(tmp_path / "m.csv")
