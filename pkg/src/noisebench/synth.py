"""Synthetic corpora for tests and experiments.

Speech stand-ins are sequences of harmonic "syllables" separated by short
gaps, with leading and trailing silence and a faint noise floor, so that
energy VAD and histogram SNR estimation see the same structure they would on
read speech. Noise is stationary low-passed Gaussian noise.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio import AudioBuffer, write_wav
from .manifest import CorpusManifest, Utterance, save_manifest

SAMPLE_RATE = 16000
DURATION_QUANTUM = 1.0 / 64.0  # dyadic, so sums of durations are exact in float
_HANZI = "的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工也能下过子说产种面而方后多定行学法所民得经十三之进着等部度家电力里如水化高自二理起小物现实加量都两体制机当使点从业本去把性好应开它合还因由其些然前外天政四日那社义事平形相全表间样与关各重新线内数正心反你明看原又么利比或但质气第向道命此变条只没结解问意建月公无系军很情者最立代想已通并提直题党程展五果料象员革位入常文总次品式活设及管特件长求老头基资边流路级少图山统接知较将组见计别她手角期根论运农指几九区强放决西被干做必战先回则任取据处理府研质"


def _ramp(n, sr, ms=10.0):
    k = min(n // 2, int(sr * ms / 1000.0))
    env = np.ones(n)
    if k > 0:
        r = 0.5 - 0.5 * np.cos(np.pi * np.arange(k) / k)
        env[:k] = r
        env[n - k:] = r[::-1]
    return env


def speech_like(
    duration_s: float,
    level_db: float,
    rng: np.random.Generator,
    sample_rate: int = SAMPLE_RATE,
    floor_db: float = -75.0,
    level_jitter_db: float = 0.25,
) -> AudioBuffer:
    """Speech stand-in whose active (syllable) parts have mean power `level_db`."""
    n = int(round(duration_s * sample_rate))
    x = np.zeros(n)
    lead = int(rng.uniform(0.15, 0.3) * sample_rate)
    tail = int(rng.uniform(0.15, 0.3) * sample_rate)
    pos, end = lead, n - tail
    t_all = np.arange(n) / sample_rate
    while pos < end:
        syl = min(int(rng.uniform(0.3, 0.7) * sample_rate), end - pos)
        if syl < int(0.04 * sample_rate):
            break
        f0 = rng.uniform(100.0, 250.0)
        t = t_all[pos:pos + syl]
        harmonics = np.arange(1, int(3500.0 / f0) + 1)
        amps = 1.0 / harmonics
        phases = rng.uniform(0, 2 * np.pi, len(harmonics))
        wave = (amps[:, None] * np.sin(2 * np.pi * f0 * harmonics[:, None] * t + phases[:, None])).sum(axis=0)
        wave *= _ramp(syl, sample_rate)
        target = level_db + rng.uniform(-level_jitter_db, level_jitter_db)
        wave *= math.sqrt(10 ** (target / 10) / np.mean(wave**2))
        x[pos:pos + syl] = wave
        pos += syl + int(rng.uniform(0.04, 0.08) * sample_rate)
    x += rng.standard_normal(n) * math.sqrt(10 ** (floor_db / 10))
    return AudioBuffer(x, sample_rate)


def stationary_noise(
    duration_s: float,
    level_db: float,
    rng: np.random.Generator,
    sample_rate: int = SAMPLE_RATE,
    smoothing: float = 0.7,
) -> AudioBuffer:
    """Low-passed Gaussian noise at mean power `level_db` (first-order recursive filter)."""
    n = int(round(duration_s * sample_rate))
    w = rng.standard_normal(n)
    y = lfilter([1.0], [1.0, -smoothing], w)
    y *= math.sqrt(10 ** (level_db / 10) / np.mean(y**2))
    return AudioBuffer(y, sample_rate)


_HANZI_ARRAY = np.array(list(_HANZI))


def random_transcript(rng: np.random.Generator, n_chars: int) -> str:
    return "".join(_HANZI_ARRAY[rng.integers(0, len(_HANZI_ARRAY), n_chars)])


def aishell_ids(n_utts: int, n_speakers: int, first_speaker: int = 2):
    """(utt_id, speaker_id) pairs shaped like the corpus ids, e.g. BAC009S0002W0122."""
    per = [n_utts // n_speakers + (k < n_utts % n_speakers) for k in range(n_speakers)]
    out = []
    for k, count in enumerate(per):
        spk = f"S{first_speaker + k:04d}"
        out.extend((f"BAC009{spk}W{j + 121:04d}", spk) for j in range(count))
    return out


def clean_corpus(
    out_dir: str | Path,
    n_utts: int,
    seed: int = 0,
    n_speakers: int = 10,
    level_center_db: float = -26.0,
    level_spread_db: float = 12.0,
    min_dur: float = 1.5,
    max_dur: float = 3.0,
    label: str = "train",
) -> CorpusManifest:
    """Write `n_utts` speech-like WAVs plus a Kaldi data dir; levels uniform over the spread."""
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    utts = []
    for utt_id, spk in aishell_ids(n_utts, n_speakers):
        level = level_center_db + rng.uniform(-level_spread_db / 2, level_spread_db / 2)
        buf = speech_like(rng.uniform(min_dur, max_dur), level, rng)
        path = wav_dir / f"{utt_id}.wav"
        write_wav(buf, path)
        utts.append(Utterance(utt_id, spk, path.resolve(), random_transcript(rng, int(rng.integers(6, 20))),
                              buf.duration))
    manifest = CorpusManifest(utts, label)
    save_manifest(manifest, out_dir)
    return manifest


def duration_manifest(
    n_utts: int,
    n_speakers: int,
    total_hours: float,
    seed: int = 0,
    label: str = "test",
    audio_root: str = "/nonexistent/wav",
) -> CorpusManifest:
    """Audio-free manifest whose durations sum to exactly `total_hours`.

    Durations are multiples of 1/64 s; the last utterance absorbs the rounding
    residual so the total is exact whenever it is itself a multiple of 1/64 s.
    """
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.5, 1.5, n_utts)
    quanta_total = int(round(total_hours * 3600.0 / DURATION_QUANTUM))
    quanta = np.floor(raw / raw.sum() * quanta_total).astype(np.int64)
    quanta[-1] += quanta_total - int(quanta.sum())
    chars = _HANZI_ARRAY[rng.integers(0, len(_HANZI_ARRAY), (n_utts, 10))]
    utts = [
        Utterance(utt_id, spk, f"{audio_root}/{utt_id}.wav", "".join(text), float(q) * DURATION_QUANTUM)
        for (utt_id, spk), q, text in zip(aishell_ids(n_utts, n_speakers), quanta, chars)
    ]
    return CorpusManifest(utts, label)
