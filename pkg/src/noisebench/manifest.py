"""Kaldi-style data directories: load, save, validate, merge and subset.

A data directory holds parallel files keyed by utterance id, each sorted
byte-wise by id, UTF-8, one "<utt_id> <value>" record per line:

    wav.scp   <utt_id> <path>          (relative paths resolve against the dir)
    text      <utt_id> <transcript>
    utt2spk   <utt_id> <speaker_id>    (optional)
    utt2dur   <utt_id> <seconds>       (optional; avoids reading audio headers)
    spk2utt   <speaker_id> <utt_id>... (written, never read)
"""

from __future__ import annotations

import json
import math
import os
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .audio import read_wav_info
from .keyed_hash import keyed_hash

SNR_SUFFIX_RE = re.compile(r"_snr(-?\d+(?:\.\d+)?)$")


class ManifestError(ValueError):
    pass


class MalformedLineError(ManifestError):
    def __init__(self, path, lineno, line, why):
        self.path, self.lineno = str(path), lineno
        super().__init__(f"{path}:{lineno}: {why}: {line!r}")


class DuplicateIdError(ManifestError):
    pass


class IdMismatchError(ManifestError):
    def __init__(self, left_name, right_name, only_left, only_right):
        self.only_left, self.only_right = sorted(only_left), sorted(only_right)
        parts = []
        if self.only_left:
            parts.append(f"in {left_name} but not {right_name}: {_preview(self.only_left)}")
        if self.only_right:
            parts.append(f"in {right_name} but not {left_name}: {_preview(self.only_right)}")
        super().__init__("utterance ids differ; " + "; ".join(parts))


class SuffixCollisionError(ManifestError):
    pass


class CountMismatchError(ManifestError):
    pass


def _preview(ids, n=10):
    ids = list(ids)
    return ", ".join(ids[:n]) + (f" ... ({len(ids)} total)" if len(ids) > n else "")


def id_sort_key(utt_id: str) -> bytes:
    return utt_id.encode("utf-8")


def default_speaker(utt_id: str) -> str:
    """Speaker fallback when no utt2spk exists: the id up to its last underscore."""
    head, sep, _ = utt_id.rpartition("_")
    return head if sep and head else utt_id


@dataclass(frozen=True)
class Utterance:
    utt_id: str
    speaker_id: str
    audio_path: Path
    transcript: str
    duration_s: float | None = None

    def __post_init__(self):
        if not self.utt_id or any(c.isspace() for c in self.utt_id):
            raise ManifestError(f"invalid utterance id {self.utt_id!r}")
        object.__setattr__(self, "audio_path", Path(self.audio_path))
        if self.duration_s is not None:
            object.__setattr__(self, "duration_s", float(self.duration_s))

    @property
    def duration(self) -> float:
        """Duration in seconds; read from the WAV header once if not known."""
        if self.duration_s is None:
            object.__setattr__(self, "duration_s", read_wav_info(self.audio_path).duration)
        return self.duration_s

    def replace(self, **changes) -> "Utterance":
        d = {f: getattr(self, f) for f in ("utt_id", "speaker_id", "audio_path", "transcript", "duration_s")}
        d.update(changes)
        return Utterance(**d)


class CorpusManifest:
    """Immutable, id-sorted collection of utterances."""

    def __init__(self, utterances: Iterable[Utterance], label: str = ""):
        utts = sorted(utterances, key=lambda u: id_sort_key(u.utt_id))
        dups = [k for k, n in Counter(u.utt_id for u in utts).items() if n > 1]
        if dups:
            raise DuplicateIdError(f"duplicate utterance ids: {_preview(sorted(dups))}")
        self._utts = tuple(utts)
        self._index = {u.utt_id: u for u in utts}
        self.label = label

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self._utts)

    def __len__(self):
        return len(self._utts)

    def __getitem__(self, utt_id: str) -> Utterance:
        return self._index[utt_id]

    def __contains__(self, utt_id):
        return utt_id in self._index

    def __eq__(self, other):
        if not isinstance(other, CorpusManifest):
            return NotImplemented
        return self.label == other.label and self._utts == other._utts

    def __repr__(self):
        return f"CorpusManifest(label={self.label!r}, utterances={len(self)})"

    @property
    def utterances(self) -> tuple[Utterance, ...]:
        return self._utts

    @property
    def ids(self) -> list[str]:
        return [u.utt_id for u in self._utts]

    @property
    def speakers(self) -> list[str]:
        return sorted({u.speaker_id for u in self._utts}, key=id_sort_key)

    def relabel(self, label: str) -> "CorpusManifest":
        return CorpusManifest(self._utts, label)

    def durations(self, jobs: int = 1) -> list[float]:
        if jobs > 1 and any(u.duration_s is None for u in self._utts):
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(lambda u: u.duration, self._utts))
        return [u.duration for u in self._utts]

    def total_seconds(self, jobs: int = 1) -> float:
        return math.fsum(self.durations(jobs))

    def total_hours(self, jobs: int = 1) -> float:
        return self.total_seconds(jobs) / 3600.0


# --- reading and writing ------------------------------------------------------


def read_table(path: Path, allow_empty_value: bool = False) -> dict[str, str]:
    table = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.strip().split(maxsplit=1)
            key = parts[0]
            value = parts[1].strip() if len(parts) > 1 else ""
            if not value and not allow_empty_value:
                raise MalformedLineError(path, lineno, line, "expected '<utt_id> <value>'")
            if key in table:
                raise DuplicateIdError(f"{path}:{lineno}: duplicate id {key!r}")
            table[key] = value
    return table


def _check_same_ids(a: dict, b: dict, a_name: str, b_name: str):
    if a.keys() != b.keys():
        raise IdMismatchError(a_name, b_name, a.keys() - b.keys(), b.keys() - a.keys())


def load_manifest(data_dir: str | os.PathLike, label: str | None = None) -> CorpusManifest:
    data_dir = Path(data_dir)
    wav_scp, text = data_dir / "wav.scp", data_dir / "text"
    for required in (wav_scp, text):
        if not required.is_file():
            raise FileNotFoundError(f"missing {required.name} in data directory {data_dir}: {required}")
    paths = read_table(wav_scp)
    texts = read_table(text, allow_empty_value=True)
    _check_same_ids(texts, paths, "text", "wav.scp")

    spk_file = data_dir / "utt2spk"
    if spk_file.is_file():
        spk = read_table(spk_file)
        _check_same_ids(spk, paths, "utt2spk", "wav.scp")
    else:
        spk = {k: default_speaker(k) for k in paths}

    dur = {}
    dur_file = data_dir / "utt2dur"
    if dur_file.is_file():
        for k, v in read_table(dur_file).items():
            try:
                dur[k] = float(v)
            except ValueError:
                raise ManifestError(f"{dur_file}: bad duration {v!r} for {k}") from None
        _check_same_ids(dur, paths, "utt2dur", "wav.scp")

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else (data_dir / p).resolve()

    utts = [Utterance(k, spk[k], resolve(paths[k]), texts[k], dur.get(k)) for k in paths]
    return CorpusManifest(utts, label if label is not None else data_dir.resolve().name)


def _write_lines(path: Path, lines: Iterable[str]):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def save_manifest(manifest: CorpusManifest, data_dir: str | os.PathLike) -> Path:
    """Write wav.scp, text, utt2spk, spk2utt and (when every duration is known) utt2dur.

    Audio paths inside `data_dir` are stored relative to it so the directory
    can be moved as a unit.
    """
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    root = data_dir.resolve()

    def rel(p: Path):
        p = Path(p)
        try:
            return p.resolve().relative_to(root).as_posix()
        except ValueError:
            return str(p.resolve())

    utts = list(manifest)
    _write_lines(data_dir / "wav.scp", (f"{u.utt_id} {rel(u.audio_path)}" for u in utts))
    _write_lines(data_dir / "text", (f"{u.utt_id} {u.transcript}".rstrip(" ") for u in utts))
    _write_lines(data_dir / "utt2spk", (f"{u.utt_id} {u.speaker_id}" for u in utts))
    spk2utt: dict[str, list[str]] = {}
    for u in utts:
        spk2utt.setdefault(u.speaker_id, []).append(u.utt_id)
    _write_lines(
        data_dir / "spk2utt",
        (f"{s} {' '.join(spk2utt[s])}" for s in sorted(spk2utt, key=id_sort_key)),
    )
    dur_file = data_dir / "utt2dur"
    if utts and all(u.duration_s is not None for u in utts):
        _write_lines(dur_file, (f"{u.utt_id} {u.duration_s!r}" for u in utts))
    elif dur_file.exists():
        dur_file.unlink()
    return data_dir


# --- split validation ---------------------------------------------------------


@dataclass(frozen=True)
class SplitExpectation:
    expected_utterances: int
    expected_hours: float
    expected_speakers: int
    utterance_tolerance: int = 0
    hours_tolerance: float = 0.5
    speaker_tolerance: int = 0

    def __post_init__(self):
        if min(self.expected_utterances, self.expected_hours, self.expected_speakers) <= 0:
            raise ValueError("split expectations must be positive")


# published split sizes; hours are quoted to the nearest hour, hence +-0.5 h
AISHELL1_SPLITS = {
    "train": SplitExpectation(118664, 148.0, 336),
    "dev": SplitExpectation(14326, 18.0, 40),
    "test": SplitExpectation(7176, 10.0, 20),
}


@dataclass
class CheckResult:
    dimension: str
    expected: float
    measured: float
    tolerance: float
    passed: bool


@dataclass
class ValidationReport:
    label: str
    checks: list[CheckResult]
    unreadable: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.unreadable and all(c.passed for c in self.checks)

    def check(self, dimension: str) -> CheckResult:
        return next(c for c in self.checks if c.dimension == dimension)

    def to_dict(self):
        return {
            "label": self.label,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "unreadable": self.unreadable,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def validate_split(manifest: CorpusManifest, expect: SplitExpectation, jobs: int = 1) -> ValidationReport:
    unreadable = {}

    def dur(u):
        try:
            return u.duration
        except (OSError, ValueError) as exc:
            unreadable[u.utt_id] = f"{type(exc).__name__}: {exc}"
            return 0.0

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            durations = list(pool.map(dur, manifest))
    else:
        durations = [dur(u) for u in manifest]
    hours = math.fsum(durations) / 3600.0

    def mk(dim, expected, measured, tol):
        return CheckResult(dim, expected, measured, tol, abs(measured - expected) <= tol)

    checks = [
        mk("utterances", expect.expected_utterances, len(manifest), expect.utterance_tolerance),
        mk("hours", expect.expected_hours, hours, expect.hours_tolerance),
        mk("speakers", expect.expected_speakers, len(manifest.speakers), expect.speaker_tolerance),
    ]
    return ValidationReport(manifest.label, checks, dict(sorted(unreadable.items())))


# --- multi-condition assembly and subsetting ----------------------------------


def snr_suffix(target_snr_db: float) -> str:
    t = float(target_snr_db)
    return f"_snr{int(t)}" if t.is_integer() else f"_snr{t:g}"


def manifest_suffix(manifest: CorpusManifest) -> str:
    """The single "_snr{T}" suffix shared by every id of a noisy manifest."""
    suffixes = set()
    for u in manifest:
        m = SNR_SUFFIX_RE.search(u.utt_id)
        if not m:
            raise ManifestError(f"{manifest.label}: id {u.utt_id!r} lacks an _snr{{T}} suffix")
        suffixes.add(m.group(0))
    if len(suffixes) != 1:
        raise ManifestError(f"{manifest.label}: mixed or missing SNR suffixes {sorted(suffixes)}")
    return suffixes.pop()


def make_multicondition(
    clean: CorpusManifest, noisy: list[CorpusManifest], label: str = "multicondition"
) -> CorpusManifest:
    clean_ids = Counter(clean.ids)
    seen: dict[str, str] = {}
    for m in noisy:
        suffix = manifest_suffix(m) if len(m) else ""
        if suffix in seen:
            raise SuffixCollisionError(
                f"noisy manifests {seen[suffix]!r} and {m.label!r} share suffix {suffix!r}"
            )
        seen[suffix] = m.label
        if len(m) != len(clean):
            raise CountMismatchError(
                f"noisy manifest {m.label!r} has {len(m)} utterances, clean has {len(clean)}"
            )
        stripped = Counter(u.utt_id[: -len(suffix)] for u in m)
        if stripped != clean_ids:
            raise IdMismatchError(
                clean.label or "clean", m.label or "noisy",
                (clean_ids - stripped).keys(), (stripped - clean_ids).keys(),
            )
    return CorpusManifest([u for m in (clean, *noisy) for u in m], label)


def subset_by_hours(manifest: CorpusManifest, target_hours: float, seed: int, label: str | None = None) -> CorpusManifest:
    """Take utterances in keyed-hash order until their duration first reaches `target_hours`."""
    total = manifest.total_hours()
    if not target_hours > 0:
        raise ValueError(f"target_hours must be positive, got {target_hours}")
    # tolerate float summation-order differences when asking for everything
    if target_hours > total * (1 + 1e-12):
        raise ValueError(f"requested {target_hours} h but the manifest holds only {total:.4f} h")
    order = sorted(manifest, key=lambda u: (keyed_hash(seed, u.utt_id), id_sort_key(u.utt_id)))
    target_s = target_hours * 3600.0
    picked, acc = [], 0.0
    for u in order:
        if acc >= target_s * (1 - 1e-12):
            break
        picked.append(u)
        acc += u.duration
    name = label if label is not None else f"{manifest.label}_{target_hours:g}h"
    return CorpusManifest(picked, name)


def speaker_coverage(subset: CorpusManifest, full: CorpusManifest) -> dict:
    full_spk = set(full.speakers)
    sub_spk = set(subset.speakers)
    return {
        "speakers_total": len(full_spk),
        "speakers_covered": len(sub_spk & full_spk),
        "fraction": len(sub_spk & full_spk) / len(full_spk) if full_spk else 0.0,
        "missing": sorted(full_spk - sub_spk, key=id_sort_key),
    }
