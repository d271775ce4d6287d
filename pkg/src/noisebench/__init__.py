"""Noisy-corpus construction and CER evaluation toolkit."""

from .audio import AudioBuffer, duration_seconds, read_wav, write_wav
from .manifest import (
    CorpusManifest,
    SplitExpectation,
    Utterance,
    load_manifest,
    make_multicondition,
    save_manifest,
    subset_by_hours,
    validate_split,
)
from .mixer import MixPlan, MixRecord, calibrate_gain, draw_offset, mix_corpus, mix_utterance
from .score import ScoreReport, SignificanceReport, align, compare_engines, score_corpus, tokenize
from .snr import SnrEstimate, SnrProfile, corpus_snr_profile, estimate_snr, frame_powers, mean_power_db

__version__ = "0.1.0"
