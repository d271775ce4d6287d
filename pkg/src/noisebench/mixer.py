"""Corpus-level noise mixing at a calibrated average SNR.

One noise gain is chosen per target SNR for the whole corpus so that the
arithmetic mean of the per-utterance SNRs (in dB) equals the target. Each
utterance then receives a circularly wrapped piece of the noise recording
starting at an offset drawn from a keyed hash of (seed, utterance id).
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, SampleRateMismatchError, check_same_rate, read_wav, write_wav
from .keyed_hash import check_seed, keyed_hash
from .manifest import CorpusManifest, Utterance, save_manifest, snr_suffix
from .snr import SilentAudioError, mean_power_db

log = logging.getLogger(__name__)

CLIP_LIMIT = 0.999
PLAN_FILENAME = "mix_plan.json"


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class MixRecord:
    utt_id: str
    noise_offset_samples: int
    pre_clip_peak: float
    rescale_factor: float
    realized_snr_db: float
    speech_power_db: float


@dataclass
class MixPlan:
    target_snr_db: float
    noise_gain: float
    noise_power_db: float
    seed: int = 0
    mean_speech_power_db: float = 0.0
    calibration_count: int = 0
    per_utterance: dict[str, MixRecord] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def gain_db(self) -> float:
        return 20.0 * math.log10(self.noise_gain)

    @property
    def scaled_noise_power_db(self) -> float:
        return self.noise_power_db + self.gain_db

    def realized_snrs(self) -> np.ndarray:
        return np.array([r.realized_snr_db for r in self.per_utterance.values()])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_utterance"] = {k: asdict(r) for k, r in self.per_utterance.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "MixPlan":
        d = dict(d)
        d["per_utterance"] = {k: MixRecord(**r) for k, r in d.get("per_utterance", {}).items()}
        return cls(**d)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "MixPlan":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def noise_power_db(noise: AudioBuffer) -> float:
    if not np.any(noise.samples):
        raise CalibrationError(f"noise recording {noise.source_path or ''} is silent")
    return mean_power_db(noise, active_only=False)


def gain_for_target(speech_powers_db, noise_db: float, target_snr_db: float) -> tuple[float, float]:
    """Return (gain_db, mean speech power) such that mean(speech - noise - gain_db) == target."""
    powers = np.asarray(list(speech_powers_db), dtype=np.float64)
    if powers.size == 0:
        raise CalibrationError("no utterances to calibrate against")
    mean_speech = math.fsum(powers) / powers.size
    return mean_speech - noise_db - target_snr_db, mean_speech


def _speech_power(utt: Utterance, noise: AudioBuffer) -> float:
    speech = read_wav(utt.audio_path)
    check_same_rate(speech, noise)
    return mean_power_db(speech, active_only=True)


def calibrate_gain(
    manifest: CorpusManifest,
    noise: AudioBuffer,
    target_snr_db: float,
    sample_size: int | None = None,
    jobs: int = 1,
) -> MixPlan:
    """Choose the single noise gain that puts the corpus average SNR at `target_snr_db`.

    The average runs over the first `sample_size` utterances in manifest order,
    or over the whole manifest by default.
    """
    if len(manifest) == 0:
        raise CalibrationError("cannot calibrate on an empty manifest")
    utts = list(manifest)[:sample_size] if sample_size else list(manifest)
    noise_db = noise_power_db(noise)

    def one(u):
        try:
            return _speech_power(u, noise)
        except SilentAudioError as exc:
            raise CalibrationError(f"utterance {u.utt_id} is silent and cannot be calibrated: {exc}") from exc

    powers = _map(one, utts, jobs)
    gain_db, mean_speech = gain_for_target(powers, noise_db, target_snr_db)
    return MixPlan(
        target_snr_db=float(target_snr_db),
        noise_gain=10.0 ** (gain_db / 20.0),
        noise_power_db=noise_db,
        mean_speech_power_db=mean_speech,
        calibration_count=len(utts),
    )


def draw_offset(seed: int, utt_id: str, noise_len: int, utt_len: int = 0) -> int:
    """Start sample of the noise piece for one utterance.

    offset = keyed_hash(seed, utt_id) mod noise_len. `utt_len` may exceed the
    remaining noise; mixing then wraps around to the start of the recording.
    """
    if noise_len <= 0:
        raise ValueError("noise must contain at least one sample")
    return keyed_hash(seed, utt_id) % noise_len


def noise_segment(noise: AudioBuffer, offset: int, length: int) -> np.ndarray:
    idx = (offset + np.arange(length)) % len(noise.samples)
    return noise.samples[idx]


def mix_utterance(
    speech: AudioBuffer,
    noise: AudioBuffer,
    gain: float,
    offset: int,
    utt_id: str = "",
    speech_power_db: float | None = None,
    noise_db: float | None = None,
) -> tuple[AudioBuffer, MixRecord]:
    """Add `gain` times the noise piece starting at `offset` to `speech`.

    If the sum peaks above 0.999 the whole output is scaled down to that peak;
    speech and noise shrink together, so the realized SNR is unchanged.
    """
    check_same_rate(speech, noise)
    if not gain > 0:
        raise ValueError(f"noise gain must be positive, got {gain}")
    if speech_power_db is None:
        speech_power_db = mean_power_db(speech, active_only=True)
    if noise_db is None:
        noise_db = noise_power_db(noise)
    out = speech.samples + gain * noise_segment(noise, offset, len(speech.samples))
    peak = float(np.max(np.abs(out))) if len(out) else 0.0
    rescale = 1.0
    if peak > CLIP_LIMIT:
        rescale = CLIP_LIMIT / peak
        out = out * rescale
    record = MixRecord(
        utt_id=utt_id,
        noise_offset_samples=int(offset),
        pre_clip_peak=peak,
        rescale_factor=rescale,
        realized_snr_db=speech_power_db - (noise_db + 20.0 * math.log10(gain)),
        speech_power_db=speech_power_db,
    )
    return AudioBuffer(out, speech.sample_rate), record


def _map(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def mix_corpus(
    manifest: CorpusManifest,
    noise: AudioBuffer,
    target_snr_db: float,
    seed: int,
    out_dir: str | os.PathLike,
    sample_size: int | None = None,
    jobs: int = 1,
    label: str | None = None,
) -> tuple[CorpusManifest, MixPlan]:
    """Calibrate once, mix every utterance and write a complete data directory.

    Output: `out_dir/{utt_id}_snr{T}.wav` per utterance, the Kaldi files for
    the new manifest and `mix_plan.json`. Silent or unreadable utterances are
    skipped and listed in `MixPlan.skipped`; calibration covers the rest.
    """
    seed = check_seed(seed)
    if len(manifest) == 0:
        raise CalibrationError("cannot mix an empty manifest")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = snr_suffix(target_snr_db)
    noise_db = noise_power_db(noise)

    def power(u):
        try:
            return _speech_power(u, noise), None
        except SampleRateMismatchError:
            raise
        except SilentAudioError as exc:
            return None, f"silent: {exc}"
        except (OSError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    utts = list(manifest)
    powers = dict(zip((u.utt_id for u in utts), _map(power, utts, jobs)))
    skipped = {k: err for k, (_, err) in powers.items() if err is not None}
    usable = [u for u in utts if powers[u.utt_id][1] is None]
    for k, err in skipped.items():
        log.warning("skipping %s: %s", k, err)
    if not usable:
        raise CalibrationError("no usable utterances to calibrate against")

    calib = usable[:sample_size] if sample_size else usable
    gain_db, mean_speech = gain_for_target((powers[u.utt_id][0] for u in calib), noise_db, target_snr_db)
    gain = 10.0 ** (gain_db / 20.0)
    noise_len = len(noise.samples)

    def mix(u):
        new_id = u.utt_id + suffix
        try:
            speech = read_wav(u.audio_path)
            offset = draw_offset(seed, new_id, noise_len, len(speech.samples))
            mixed, rec = mix_utterance(speech, noise, gain, offset, new_id, powers[u.utt_id][0], noise_db)
            wav_path = out_dir / f"{new_id}.wav"
            write_wav(mixed, wav_path)
        except (OSError, ValueError) as exc:
            return u, None, None, f"{type(exc).__name__}: {exc}"
        return u, rec, u.replace(utt_id=new_id, audio_path=wav_path.resolve(), duration_s=mixed.duration), None

    new_utts, records = [], {}
    for u, rec, new_u, err in _map(mix, usable, jobs):
        if err is not None:
            log.warning("failed to mix %s: %s", u.utt_id, err)
            skipped[u.utt_id] = err
            continue
        records[rec.utt_id] = rec
        new_utts.append(new_u)

    out_manifest = CorpusManifest(new_utts, label if label is not None else (manifest.label or "data") + suffix)
    plan = MixPlan(
        target_snr_db=float(target_snr_db),
        noise_gain=gain,
        noise_power_db=noise_db,
        seed=seed,
        mean_speech_power_db=mean_speech,
        calibration_count=len(calib),
        per_utterance=dict(sorted(records.items(), key=lambda kv: kv[0].encode("utf-8"))),
        skipped=dict(sorted(skipped.items())),
    )
    save_manifest(out_manifest, out_dir)
    (out_dir / PLAN_FILENAME).write_text(plan.to_json() + "\n", encoding="utf-8")
    return out_manifest, plan
