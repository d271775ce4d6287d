"""Frame powers, mean speech/noise power and a histogram-based SNR estimator.

The estimator approximates NIST STNR: frame powers are split into a low and a
high class, the noise level is the most populated 0.5 dB bin of the low class
and the signal level is the 95th percentile of all frame powers.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, read_wav

log = logging.getLogger(__name__)

FLOOR_DB = -120.0
FRAME_MS = 20.0
HOP_MS = 10.0
HIST_BIN_DB = 0.5
SIGNAL_PERCENTILE = 95.0
VAD_PERCENTILE = 20.0
VAD_MARGIN_DB = 3.0
MIN_ESTIMATE_SECONDS = 1.0
PROFILE_PERCENTILES = (5, 25, 50, 75, 95)


class ShortBufferError(ValueError):
    pass


class SilentAudioError(ValueError):
    """Buffer carries no energy; it cannot be used as speech or noise."""


class DegenerateHistogramError(ValueError):
    """All frames share one power bin, so noise and signal modes coincide."""


class Method(str, enum.Enum):
    NIST_HISTOGRAM = "NistHistogram"
    CONSTRUCTION_RATIO = "ConstructionRatio"


@dataclass(frozen=True)
class FramePowers:
    powers_db: np.ndarray
    frame_ms: float
    hop_ms: float

    def __len__(self):
        return len(self.powers_db)

    def linear(self) -> np.ndarray:
        return 10.0 ** (self.powers_db / 10.0)


@dataclass(frozen=True)
class SnrEstimate:
    signal_power_db: float
    noise_power_db: float
    snr_db: float
    method: Method = Method.NIST_HISTOGRAM

    @classmethod
    def from_powers(cls, signal_db, noise_db, method=Method.NIST_HISTOGRAM):
        return cls(float(signal_db), float(noise_db), float(signal_db - noise_db), Method(method))

    def as_dict(self):
        return {
            "signal_power_db": self.signal_power_db,
            "noise_power_db": self.noise_power_db,
            "snr_db": self.snr_db,
            "method": self.method.value,
        }


def power_to_db(power):
    """Power to dB with the silence floor applied (never -inf)."""
    return np.maximum(10.0 * np.log10(np.maximum(power, 1e-300)), FLOOR_DB)


def _frame_geometry(sample_rate, frame_ms, hop_ms):
    if not frame_ms >= hop_ms > 0:
        raise ValueError(f"need frame_ms >= hop_ms > 0, got frame_ms={frame_ms}, hop_ms={hop_ms}")
    frame_len = max(1, int(round(frame_ms * sample_rate / 1000.0)))
    hop = max(1, int(round(hop_ms * sample_rate / 1000.0)))
    return frame_len, hop


def frame_powers(buffer: AudioBuffer, frame_ms: float = FRAME_MS, hop_ms: float = HOP_MS) -> FramePowers:
    frame_len, hop = _frame_geometry(buffer.sample_rate, frame_ms, hop_ms)
    x = buffer.samples
    if len(x) < frame_len:
        raise ShortBufferError(
            f"buffer of {len(x)} samples is shorter than one {frame_ms} ms frame ({frame_len} samples)"
        )
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop]
    mean_square = np.einsum("ij,ij->i", frames, frames) / frame_len
    return FramePowers(power_to_db(mean_square), frame_ms, hop_ms)


def active_mask(powers_db: np.ndarray) -> np.ndarray:
    """Energy VAD: frames louder than the 20th percentile frame power plus 3 dB.

    A signal without that much dynamic range (e.g. stationary noise or a
    constant tone) has no distinguishable inactive part, so every frame counts
    as active.
    """
    threshold = np.percentile(powers_db, VAD_PERCENTILE) + VAD_MARGIN_DB
    mask = powers_db > threshold
    if not mask.any():
        mask = np.ones_like(mask)
    return mask


def mean_power_db(
    buffer: AudioBuffer,
    active_only: bool = False,
    frame_ms: float = FRAME_MS,
    hop_ms: float = HOP_MS,
) -> float:
    if len(buffer) == 0:
        raise ValueError("mean power of an empty buffer is undefined")
    if not np.any(buffer.samples):
        raise SilentAudioError(f"all-zero buffer ({buffer.source_path or 'in memory'})")
    frame_len, _ = _frame_geometry(buffer.sample_rate, frame_ms, hop_ms)
    if len(buffer) < frame_len:
        # a sub-frame buffer is treated as a single frame
        return float(power_to_db(np.mean(buffer.samples**2)))
    fp = frame_powers(buffer, frame_ms, hop_ms)
    lin = fp.linear()
    if active_only:
        lin = lin[active_mask(fp.powers_db)]
    return float(power_to_db(np.mean(lin)))


def otsu_split(values: np.ndarray) -> int:
    """Index k splitting sorted `values` into [:k] and [k:] with maximal between-class variance."""
    v = np.sort(values)
    n = len(v)
    csum = np.cumsum(v)
    k = np.arange(1, n)
    w0 = k / n
    mu0 = csum[:-1] / k
    mu1 = (csum[-1] - csum[:-1]) / (n - k)
    between = w0 * (1 - w0) * (mu0 - mu1) ** 2
    return int(np.argmax(between)) + 1


def noise_mode_db(powers_db: np.ndarray, bin_db: float = HIST_BIN_DB) -> float:
    """Center of the most populated histogram bin among the low-power class of frames."""
    measured = powers_db[powers_db > FLOOR_DB]
    if len(measured) < 2:
        measured = powers_db
    lo, hi = float(np.min(measured)), float(np.max(measured))
    if hi - lo < bin_db:
        raise DegenerateHistogramError(
            f"frame powers span {hi - lo:.3f} dB (< one {bin_db} dB bin); SNR is undefined"
        )
    low = np.sort(measured)[: otsu_split(measured)]
    nbins = int(math.floor((low[-1] - lo) / bin_db)) + 1
    idx = np.minimum(((low - lo) / bin_db).astype(int), nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    return lo + (int(np.argmax(counts)) + 0.5) * bin_db


def estimate_snr(buffer: AudioBuffer, frame_ms: float = FRAME_MS, hop_ms: float = HOP_MS) -> SnrEstimate:
    if buffer.duration < MIN_ESTIMATE_SECONDS:
        raise ShortBufferError(
            f"SNR estimation needs at least {MIN_ESTIMATE_SECONDS} s of audio, got {buffer.duration:.3f} s"
        )
    powers = frame_powers(buffer, frame_ms, hop_ms).powers_db
    noise = noise_mode_db(powers)
    signal = float(np.percentile(powers, SIGNAL_PERCENTILE))
    return SnrEstimate.from_powers(signal, noise, Method.NIST_HISTOGRAM)


class ProfileError(RuntimeError):
    def __init__(self, failures: dict[str, str]):
        self.failures = dict(sorted(failures.items()))
        lines = "; ".join(f"{k}: {v}" for k, v in list(self.failures.items())[:5])
        more = "" if len(self.failures) <= 5 else f" (+{len(self.failures) - 5} more)"
        super().__init__(f"{len(self.failures)} utterance(s) failed SNR estimation: {lines}{more}")


@dataclass
class SnrProfile:
    estimates: dict[str, SnrEstimate]
    failures: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.estimates = dict(sorted(self.estimates.items(), key=lambda kv: kv[0].encode("utf-8")))
        self.failures = dict(sorted(self.failures.items()))

    @property
    def per_utterance_snr_db(self) -> dict[str, float]:
        return {k: e.snr_db for k, e in self.estimates.items()}

    def _values(self):
        if not self.estimates:
            raise ValueError("profile holds no estimates")
        return np.array([e.snr_db for e in self.estimates.values()])

    @property
    def mean_db(self) -> float:
        return float(np.mean(self._values()))

    @property
    def stddev_db(self) -> float:
        return float(np.std(self._values()))

    @property
    def percentiles(self) -> dict[int, float]:
        vals = self._values()
        return {p: float(np.percentile(vals, p)) for p in PROFILE_PERCENTILES}

    def summary(self) -> dict:
        return {
            "count": len(self.estimates),
            "mean_db": self.mean_db,
            "stddev_db": self.stddev_db,
            "percentiles": {str(k): v for k, v in self.percentiles.items()},
        }

    def to_dict(self) -> dict:
        return {
            **self.summary(),
            "method": Method.NIST_HISTOGRAM.value,
            "per_utterance": {k: e.as_dict() for k, e in self.estimates.items()},
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SnrProfile":
        est = {
            k: SnrEstimate.from_powers(v["signal_power_db"], v["noise_power_db"], v.get("method", "NistHistogram"))
            for k, v in d["per_utterance"].items()
        }
        return cls(est, d.get("failures", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["utt_id", "snr_db", "signal_db", "noise_db"])
        for k, e in self.estimates.items():
            w.writerow([k, f"{e.snr_db:.4f}", f"{e.signal_power_db:.4f}", f"{e.noise_power_db:.4f}"])
        return out.getvalue()


def corpus_snr_profile(manifest, partial: bool = False, jobs: int = 1, frame_ms=FRAME_MS, hop_ms=HOP_MS) -> SnrProfile:
    """Estimate the SNR of every utterance in `manifest`.

    Failures are collected per utterance id. Unless `partial` is set, any
    failure raises ProfileError listing them all; with `partial` the profile
    covers the utterances that succeeded and records the rest in `failures`.
    """

    def one(utt):
        try:
            return utt.utt_id, estimate_snr(read_wav(utt.audio_path), frame_ms, hop_ms), None
        except (OSError, ValueError) as exc:
            return utt.utt_id, None, f"{type(exc).__name__}: {exc}"

    utts = list(manifest)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, utts))
    else:
        results = [one(u) for u in utts]

    estimates = {k: e for k, e, err in results if err is None}
    failures = {k: err for k, _, err in results if err is not None}
    if failures and not partial:
        raise ProfileError(failures)
    for k, err in failures.items():
        log.warning("SNR estimation failed for %s: %s", k, err)
    return SnrProfile(estimates, failures)
