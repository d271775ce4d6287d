"""Character error rate scoring and binomial significance between engines."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import re
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .manifest import CorpusManifest, read_table, id_sort_key

log = logging.getLogger(__name__)

SIGNIFICANCE_SDEV = 4.0

_ASCII_RUN = re.compile(r"[A-Za-z0-9]+|.", re.S)


def tokenize(transcript: str, ascii_runs: bool = False) -> list[str]:
    """Split a transcript into CER tokens.

    Whitespace is dropped and every remaining code point is a token. With
    `ascii_runs`, maximal runs of ASCII letters/digits count as one token, which
    keeps embedded English words from dominating a Chinese CER.
    """
    text = "".join(transcript.split())
    if not ascii_runs:
        return list(text)
    return _ASCII_RUN.findall(text)


@dataclass(frozen=True)
class Alignment:
    substitutions: int
    deletions: int
    insertions: int
    correct: int
    path: tuple = ()

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def ref_len(self) -> int:
        return self.substitutions + self.deletions + self.correct

    @property
    def hyp_len(self) -> int:
        return self.substitutions + self.insertions + self.correct

    @property
    def cer(self) -> float:
        if self.ref_len == 0:
            return 0.0 if self.errors == 0 else math.inf
        return self.errors / self.ref_len

    def counts(self) -> dict:
        return {"S": self.substitutions, "D": self.deletions, "I": self.insertions, "C": self.correct}


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimal unit-cost Levenshtein alignment of two token sequences.

    When several minimal paths exist the backtrace prefers, at each cell,
    match > substitution > deletion > insertion.
    """
    n, m = len(ref), len(hyp)
    prev = list(range(m + 1))
    dist = [prev]
    for i in range(1, n + 1):
        row = [i] + [0] * m
        r = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (r != hyp[j - 1])
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)
        dist.append(row)
        prev = row

    steps = []
    s = d = ins = c = 0
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i - 1][j - 1] == here:
            steps.append((ref[i - 1], hyp[j - 1], "C"))
            c += 1
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i - 1][j - 1] + 1 == here:
            steps.append((ref[i - 1], hyp[j - 1], "S"))
            s += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i - 1][j] + 1 == here:
            steps.append((ref[i - 1], None, "D"))
            d += 1
            i -= 1
        else:
            steps.append((None, hyp[j - 1], "I"))
            ins += 1
            j -= 1
    steps.reverse()
    return Alignment(s, d, ins, c, tuple(steps))


def format_alignment(utt_id: str, a: Alignment) -> str:
    """Three-line dump: ref, hyp and op rows with columns padded to equal width."""
    cols = [(r or "*", h or "*", op) for r, h, op in a.path]
    widths = [max(_width(r), _width(h), 1) for r, h, _ in cols]
    ref = " ".join(_pad(r, w) for (r, _, _), w in zip(cols, widths))
    hyp = " ".join(_pad(h, w) for (_, h, _), w in zip(cols, widths))
    ops = " ".join(_pad(op, w) for (_, _, op), w in zip(cols, widths))
    return f"{utt_id} ref {ref}\n{utt_id} hyp {hyp}\n{utt_id} op  {ops}\n"


def _width(tok):
    # CJK characters occupy two terminal columns
    return sum(2 if ord(ch) > 0x2E80 else 1 for ch in tok)


def _pad(tok, w):
    return tok + " " * (w - _width(tok))


# --- corpus scoring -----------------------------------------------------------


@dataclass
class ScoreReport:
    condition_label: str
    n_ref: int
    substitutions: int
    deletions: int
    insertions: int
    per_utterance: dict[str, Alignment] = field(default_factory=dict)
    engine: str = ""
    missing_hyps: list[str] = field(default_factory=list)
    extra_hyps: list[str] = field(default_factory=list)

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def cer(self) -> float:
        if self.n_ref == 0:
            raise ValueError("CER is undefined without reference tokens")
        return self.errors / self.n_ref

    @classmethod
    def from_alignments(cls, alignments: dict[str, Alignment], condition_label: str, **kw) -> "ScoreReport":
        ordered = dict(sorted(alignments.items(), key=lambda kv: id_sort_key(kv[0])))
        return cls(
            condition_label=condition_label,
            n_ref=sum(a.ref_len for a in ordered.values()),
            substitutions=sum(a.substitutions for a in ordered.values()),
            deletions=sum(a.deletions for a in ordered.values()),
            insertions=sum(a.insertions for a in ordered.values()),
            per_utterance=ordered,
            **kw,
        )

    @classmethod
    def from_cer(cls, cer: float, n_ref: int, condition_label: str, engine: str = "") -> "ScoreReport":
        """Summary-only report for a published CER (all errors booked as substitutions)."""
        return cls(condition_label, n_ref, int(round(cer * n_ref)), 0, 0, engine=engine)

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "condition_label": self.condition_label,
            "cer": self.cer,
            "n_ref": self.n_ref,
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "missing_hyps": self.missing_hyps,
            "extra_hyps": self.extra_hyps,
            "per_utterance": {k: a.counts() for k, a in self.per_utterance.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreReport":
        per = {
            k: Alignment(v["S"], v["D"], v["I"], v["C"]) for k, v in d.get("per_utterance", {}).items()
        }
        return cls(
            condition_label=d["condition_label"],
            n_ref=d["n_ref"],
            substitutions=d["substitutions"],
            deletions=d["deletions"],
            insertions=d["insertions"],
            per_utterance=per,
            engine=d.get("engine", ""),
            missing_hyps=list(d.get("missing_hyps", [])),
            extra_hyps=list(d.get("extra_hyps", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["utt_id", "ref_len", "S", "D", "I", "C", "cer"])
        for k, a in self.per_utterance.items():
            w.writerow([k, a.ref_len, a.substitutions, a.deletions, a.insertions, a.correct, f"{a.cer:.6f}"])
        w.writerow(["TOTAL", self.n_ref, self.substitutions, self.deletions, self.insertions,
                    self.n_ref - self.substitutions - self.deletions, f"{self.cer:.6f}"])
        return out.getvalue()


def read_hypotheses(path: str | os.PathLike) -> dict[str, str]:
    """Kaldi text format: "<utt_id> <transcript>" per line; empty transcripts allowed."""
    return read_table(Path(path), allow_empty_value=True)


def score_corpus(
    refs: CorpusManifest,
    hyps: dict[str, str],
    condition_label: str,
    ascii_runs: bool = False,
    engine: str = "",
) -> ScoreReport:
    if len(refs) == 0:
        raise ValueError("reference set is empty")
    missing = [u.utt_id for u in refs if u.utt_id not in hyps]
    extra = sorted((k for k in hyps if k not in refs), key=id_sort_key)
    if missing:
        log.warning("%d reference utterance(s) have no hypothesis; scored as empty", len(missing))
    if extra:
        log.warning("%d hypothesis id(s) not in the reference set were ignored", len(extra))
    alignments = {
        u.utt_id: align(tokenize(u.transcript, ascii_runs), tokenize(hyps.get(u.utt_id, ""), ascii_runs))
        for u in refs
    }
    return ScoreReport.from_alignments(
        alignments, condition_label, engine=engine, missing_hyps=missing, extra_hyps=extra
    )


# --- significance -------------------------------------------------------------


@dataclass(frozen=True)
class SignificanceRow:
    condition_label: str
    baseline_cer: float
    candidate_cer: float
    n_units: int
    sdev: float
    num_sdev: float
    significant: bool
    baseline_engine: str = ""


def binomial_sdev(p: float, n_units: int) -> float:
    """Standard deviation of a binomial error rate, in percentage points."""
    return 100.0 * math.sqrt(p * (1.0 - p) / n_units)


def compare_cers(
    baseline_cers: Iterable[float],
    candidate_cer: float,
    n_units: int,
    condition_label: str = "",
    baseline_names: Sequence[str] | None = None,
) -> SignificanceRow:
    """Compare a candidate against the best (lowest-CER) baseline.

    num_sdev = (baseline - candidate) / sdev in percentage points, so positive
    means the candidate is better; significant when num_sdev > 4.
    """
    cers = list(baseline_cers)
    if not cers:
        raise ValueError("at least one baseline is required")
    if n_units <= 0:
        raise ValueError(f"n_units must be positive, got {n_units}")
    best = min(range(len(cers)), key=lambda k: (cers[k], k))
    p = cers[best]
    if not 0.0 < p < 1.0:
        raise ValueError(f"baseline CER {p} must lie strictly between 0 and 1")
    sdev = binomial_sdev(p, n_units)
    num = 100.0 * (p - candidate_cer) / sdev
    name = baseline_names[best] if baseline_names else ""
    return SignificanceRow(condition_label, p, candidate_cer, n_units, sdev, num, num > SIGNIFICANCE_SDEV, name)


@dataclass
class SignificanceReport:
    n_units: int
    rows: list[SignificanceRow]
    engines: dict[str, dict[str, float]] = field(default_factory=dict)
    candidate_engine: str = "candidate"

    def row(self, condition_label: str) -> SignificanceRow:
        return next(r for r in self.rows if r.condition_label == condition_label)

    def to_dict(self) -> dict:
        return {
            "n_units": self.n_units,
            "candidate_engine": self.candidate_engine,
            "engines": self.engines,
            "rows": [r.__dict__ for r in self.rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignificanceReport":
        return cls(d["n_units"], [SignificanceRow(**r) for r in d["rows"]], d.get("engines", {}),
                   d.get("candidate_engine", "candidate"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["condition", "baseline_cer", "candidate_cer", "n_units", "sdev", "num_sdev", "significant"])
        for r in self.rows:
            w.writerow([r.condition_label, f"{r.baseline_cer:.6f}", f"{r.candidate_cer:.6f}", r.n_units,
                        f"{r.sdev:.4f}", f"{r.num_sdev:.4f}", int(r.significant)])
        return out.getvalue()

    def format_table(self) -> str:
        """Engine CER rows (percent), then sdev and #sdev; '*' marks significant columns."""
        labels = [r.condition_label for r in self.rows]
        head = ["ASR"] + labels
        body = [[name] + [_fmt_cer(cers.get(lbl)) for lbl in labels] for name, cers in self.engines.items()]
        body.append(["sdev"] + [f"{r.sdev:.2f}" for r in self.rows])
        body.append(["#sdev"] + [_fmt_nsd(r.num_sdev) for r in self.rows])
        body.append(["signif"] + ["*" if r.significant else "" for r in self.rows])
        table = [head] + body
        widths = [max(len(row[k]) for row in table) for k in range(len(head))]
        lines = ["  ".join(cell.rjust(w) if k else cell.ljust(w) for k, (cell, w) in enumerate(zip(row, widths)))
                 for row in table]
        rule = "-" * len(lines[0])
        return "\n".join([lines[0], rule, *lines[1:-3], rule, *lines[-3:]]) + "\n"


def _fmt_cer(cer):
    return "-" if cer is None else f"{100.0 * cer:.3g}"


def _fmt_nsd(x):
    return f"{x:.0f}" if abs(x) >= 10 else f"{x:.1f}"


def compare_engines(baselines: list[ScoreReport], candidate: ScoreReport, n_units: int) -> SignificanceReport:
    if not baselines:
        raise ValueError("at least one baseline report is required")
    labels = {b.condition_label for b in baselines} | {candidate.condition_label}
    if len(labels) != 1:
        raise ValueError(f"reports cover different conditions: {sorted(labels)}")
    return compare_conditions(baselines, [candidate], n_units)


def compare_conditions(
    baselines: list[ScoreReport], candidates: list[ScoreReport], n_units: int
) -> SignificanceReport:
    """Group reports by condition label and compare the candidate per condition.

    Columns follow the order in which conditions first appear among the
    candidate reports.
    """
    if not baselines:
        raise ValueError("at least one baseline report is required")
    cand_by_label: OrderedDict[str, ScoreReport] = OrderedDict()
    for c in candidates:
        if c.condition_label in cand_by_label:
            raise ValueError(f"two candidate reports for condition {c.condition_label!r}")
        cand_by_label[c.condition_label] = c
    engines: dict[str, dict[str, float]] = {}
    rows = []
    for label, cand in cand_by_label.items():
        group = [b for b in baselines if b.condition_label == label]
        if not group:
            raise ValueError(f"no baseline report for condition {label!r}")
        names = [b.engine or f"baseline{k + 1}" for k, b in enumerate(group)]
        for name, b in zip(names, group):
            engines.setdefault(name, {})[label] = b.cer
        rows.append(compare_cers([b.cer for b in group], cand.cer, n_units, label, names))
    cand_name = next((c.engine for c in candidates if c.engine), "candidate")
    engines[cand_name] = {label: c.cer for label, c in cand_by_label.items()}
    return SignificanceReport(n_units, rows, engines, cand_name)
