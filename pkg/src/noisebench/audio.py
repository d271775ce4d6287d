"""Mono 16-bit PCM WAV reading and writing.

Amplitude convention: integer samples are divided by 32768 on read and
amplitudes are multiplied by 32768, rounded half-to-even and clamped to
[-32768, 32767] on write. With this pairing a written file re-reads to the
exact same amplitudes, and any buffer in [-1, 1] survives a write/read cycle
with an error of at most one quantization step (1/32768).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FULL_SCALE = 32768.0
INT16_MIN = -32768
INT16_MAX = 32767


class AudioFormatError(ValueError):
    """Base class for WAV files this toolkit refuses to interpret."""


class NotRiffWaveError(AudioFormatError):
    pass


class NotPcmError(AudioFormatError):
    pass


class MultiChannelError(AudioFormatError):
    pass


class UnsupportedBitDepthError(AudioFormatError):
    pass


class TruncatedDataError(AudioFormatError):
    pass


class SampleRangeError(ValueError):
    """Raised when writing samples outside [-1, 1]; clipping was skipped upstream."""


class SampleRateMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int
    source_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise MultiChannelError(f"expected a 1-D sample array, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(self.samples, other.samples)

    __hash__ = None

    @property
    def duration(self) -> float:
        return duration_seconds(self)

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self.samples) else 0.0


def duration_seconds(buffer: AudioBuffer) -> float:
    return len(buffer.samples) / buffer.sample_rate


def check_same_rate(a: AudioBuffer, b: AudioBuffer) -> None:
    if a.sample_rate != b.sample_rate:
        raise SampleRateMismatchError(
            f"sample rates differ: {a.sample_rate} Hz ({a.source_path}) vs "
            f"{b.sample_rate} Hz ({b.source_path}); resampling is not supported"
        )


@dataclass(frozen=True)
class WavInfo:
    sample_rate: int
    channels: int
    bits_per_sample: int
    num_samples: int
    data_offset: int

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate


def _parse_header(f, path) -> WavInfo:
    head = f.read(12)
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise NotRiffWaveError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    while True:
        chunk = f.read(8)
        if len(chunk) < 8:
            if fmt is None:
                raise NotRiffWaveError(f"{path}: no fmt chunk")
            raise TruncatedDataError(f"{path}: no data chunk")
        chunk_id, size = struct.unpack("<4sI", chunk)
        if chunk_id == b"fmt ":
            body = f.read(size + (size & 1))
            if size < 16 or len(body) < 16:
                raise TruncatedDataError(f"{path}: fmt chunk too short")
            audio_format, channels, rate, _, _, bits = struct.unpack("<HHIIHH", body[:16])
            if audio_format != 1:
                raise NotPcmError(f"{path}: audio format {audio_format} is not integer PCM (1)")
            if channels != 1:
                raise MultiChannelError(f"{path}: {channels} channels, only mono is supported")
            if bits != 16:
                raise UnsupportedBitDepthError(f"{path}: {bits}-bit samples, only 16-bit is supported")
            if rate == 0:
                raise AudioFormatError(f"{path}: sample rate is zero")
            fmt = (rate, channels, bits)
        elif chunk_id == b"data":
            if fmt is None:
                raise NotRiffWaveError(f"{path}: data chunk precedes fmt chunk")
            if size % 2:
                raise TruncatedDataError(f"{path}: data chunk holds a partial sample")
            offset = f.tell()
            f.seek(0, os.SEEK_END)
            if f.tell() - offset < size:
                raise TruncatedDataError(
                    f"{path}: data chunk declares {size} bytes, file holds {f.tell() - offset}"
                )
            f.seek(offset)
            return WavInfo(fmt[0], fmt[1], fmt[2], size // 2, offset)
        else:
            f.seek(size + (size & 1), os.SEEK_CUR)


def read_wav_info(path: str | os.PathLike) -> WavInfo:
    """Parse only the header; cheap way to get a file's duration."""
    with open(path, "rb") as f:
        return _parse_header(f, path)


def read_wav(path: str | os.PathLike) -> AudioBuffer:
    with open(path, "rb") as f:
        info = _parse_header(f, path)
        raw = f.read(info.num_samples * 2)
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioBuffer(ints / FULL_SCALE, info.sample_rate, source_path=str(path))


def to_int16(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size and np.max(np.abs(samples)) > 1.0:
        bad = int(np.argmax(np.abs(samples)))
        raise SampleRangeError(
            f"sample {bad} has amplitude {samples[bad]:.6f} outside [-1, 1]; rescale before writing"
        )
    return np.clip(np.rint(samples * FULL_SCALE), INT16_MIN, INT16_MAX).astype("<i2")


def wav_bytes(buffer: AudioBuffer) -> bytes:
    data = to_int16(buffer.samples).tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, 1, 1, buffer.sample_rate, buffer.sample_rate * 2, 2, 16,
        b"data", len(data),
    )
    return header + data


def write_wav(buffer: AudioBuffer, path: str | os.PathLike) -> None:
    payload = wav_bytes(buffer)
    Path(path).write_bytes(payload)
