import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisebench.audio import (
    AudioBuffer,
    MultiChannelError,
    NotPcmError,
    NotRiffWaveError,
    SampleRangeError,
    TruncatedDataError,
    UnsupportedBitDepthError,
    duration_seconds,
    read_wav,
    read_wav_info,
    to_int16,
    wav_bytes,
    write_wav,
)


def raw_wav(ints, rate=16000, fmt=1, channels=1, bits=16, data_size=None):
    data = np.asarray(ints, dtype="<i2").tobytes()
    size = len(data) if data_size is None else data_size
    block = channels * bits // 8
    return (
        struct.pack("<4sI4s", b"RIFF", 36 + len(data), b"WAVE")
        + struct.pack("<4sIHHIIHH", b"fmt ", 16, fmt, channels, rate, rate * block, block, bits)
        + struct.pack("<4sI", b"data", size)
        + data
    )


def test_one_second_file(tmp_path):
    p = tmp_path / "a.wav"
    p.write_bytes(raw_wav(np.zeros(16000)))
    buf = read_wav(p)
    assert duration_seconds(buf) == 1.0
    assert buf.sample_rate == 16000


def test_min_int_maps_to_minus_one(tmp_path):
    p = tmp_path / "a.wav"
    p.write_bytes(raw_wav([-32768, 0, 32767]))
    assert read_wav(p).samples.tolist() == [-1.0, 0.0, 32767 / 32768]


def test_encode_boundaries():
    assert to_int16(np.array([1.0, 0.0, -1.0])).tolist() == [32767, 0, -32768]


def test_durations():
    assert duration_seconds(AudioBuffer(np.zeros(8000), 16000)) == 0.5
    assert duration_seconds(AudioBuffer(np.zeros(0), 16000)) == 0.0


def test_written_file_rereads_identically(tmp_path, rng):
    p, q = tmp_path / "a.wav", tmp_path / "b.wav"
    write_wav(AudioBuffer(rng.uniform(-1, 1, 5000), 16000), p)
    first = read_wav(p)
    write_wav(first, q)
    assert read_wav(q) == first
    assert p.read_bytes() == q.read_bytes()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=400), st.sampled_from([8000, 16000, 44100]))
def test_roundtrip_within_one_step(tmp_path_factory, values, rate):
    p = tmp_path_factory.mktemp("rt") / "x.wav"
    buf = AudioBuffer(np.array(values), rate)
    write_wav(buf, p)
    back = read_wav(p)
    assert back.sample_rate == rate
    assert np.max(np.abs(back.samples - buf.samples)) <= 1 / 32767


def test_header_matches_stdlib_wave(tmp_path, rng):
    import wave

    p = tmp_path / "a.wav"
    write_wav(AudioBuffer(rng.uniform(-0.5, 0.5, 1234), 22050), p)
    with wave.open(str(p)) as w:
        assert (w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getnframes()) == (1, 2, 22050, 1234)
    assert read_wav_info(p).num_samples == 1234


@pytest.mark.parametrize(
    "kwargs, error",
    [
        ({"fmt": 3}, NotPcmError),
        ({"channels": 2}, MultiChannelError),
        ({"bits": 24}, UnsupportedBitDepthError),
        ({"data_size": 4000}, TruncatedDataError),
    ],
)
def test_rejects_unsupported(tmp_path, kwargs, error):
    p = tmp_path / "bad.wav"
    p.write_bytes(raw_wav(np.zeros(100), **kwargs))
    with pytest.raises(error):
        read_wav(p)


def test_rejects_non_riff_and_missing(tmp_path):
    p = tmp_path / "x.wav"
    p.write_bytes(b"not a wav file at all")
    with pytest.raises(NotRiffWaveError):
        read_wav(p)
    with pytest.raises(FileNotFoundError):
        read_wav(tmp_path / "missing.wav")


def test_skips_unknown_chunks(tmp_path):
    body = raw_wav([1, 2, 3])
    # splice a LIST chunk with odd length (padded) between fmt and data
    extra = struct.pack("<4sI", b"LIST", 3) + b"abc\0"
    p = tmp_path / "x.wav"
    p.write_bytes(body[:36] + extra + body[36:])
    assert read_wav(p).samples.tolist() == [1 / 32768, 2 / 32768, 3 / 32768]


def test_write_rejects_out_of_range(tmp_path):
    with pytest.raises(SampleRangeError):
        write_wav(AudioBuffer(np.array([0.5, 1.2]), 16000), tmp_path / "x.wav")


def test_buffer_invariants():
    with pytest.raises(ValueError):
        AudioBuffer(np.array([np.nan]), 16000)
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros(3), 0)
    with pytest.raises(MultiChannelError):
        AudioBuffer(np.zeros((2, 3)), 16000)
    buf = AudioBuffer(np.zeros(3), 16000)
    with pytest.raises(ValueError):
        buf.samples[0] = 1.0


def test_wav_bytes_deterministic(rng):
    buf = AudioBuffer(rng.uniform(-1, 1, 100), 16000)
    assert wav_bytes(buf) == wav_bytes(AudioBuffer(buf.samples.copy(), 16000))
