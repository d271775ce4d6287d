"""Versioned JSON report envelope with resolved config and input checksums.

Everything except the "metadata" field is a deterministic function of the
inputs and flags, so two runs can be compared with `payload()`.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from pathlib import Path

SCHEMA_VERSION = 1
KALDI_FILES = ("wav.scp", "text", "utt2spk", "utt2dur")


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def checksum(path: str | os.PathLike) -> str:
    """sha256 of a file, or of a data directory's Kaldi files in fixed order."""
    path = Path(path)
    if path.is_file():
        return sha256_file(path)
    h = hashlib.sha256()
    for name in KALDI_FILES:
        f = path / name
        if f.is_file():
            h.update(name.encode() + b"\0" + f.read_bytes() + b"\0")
    return h.hexdigest()


def envelope(kind: str, config: dict, inputs: dict[str, str | os.PathLike], result: dict) -> dict:
    from . import __version__

    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "inputs": {str(p): checksum(p) for p in _flatten(inputs)},
        "result": result,
        "metadata": {
            "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "noisebench_version": __version__,
        },
    }


def _flatten(inputs):
    for v in inputs.values():
        if isinstance(v, (list, tuple)):
            yield from v
        elif v is not None:
            yield v


def payload(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "metadata"}


def write_report(report: dict, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def read_result(path: str | os.PathLike) -> dict:
    """The "result" of an enveloped report, or the whole document if it is bare."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "schema_version" in doc:
        if doc["schema_version"] > SCHEMA_VERSION:
            raise ValueError(f"{path}: schema_version {doc['schema_version']} is newer than supported")
        return doc["result"]
    return doc
