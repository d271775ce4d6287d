import hashlib
import json

import numpy as np
import pytest

from noisebench import synth
from noisebench.cli import main
from noisebench.manifest import load_manifest, save_manifest
from noisebench.reports import payload
from noisebench.score import ScoreReport

TABLE = {
    "Eng2": [4.7, 6.7, 9.6, 17, 35, 52],
    "Eng4": [7.2, 9.7, 12, 19, 30, 40],
    "Custom": [6.6, 7.1, 8.1, 10, 17, 34],
}
CONDITIONS = ["clean", "20dB", "15dB", "10dB", "5dB", "0dB"]


def data_dir(manifest):
    return next(iter(manifest)).audio_path.parent.parent


def wav_digests(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.glob("*.wav"))}


def test_profile_snr(tmp_path, small_corpus, capsys):
    out = tmp_path / "rep" / "profile.json"
    assert main(["profile-snr", "--data", str(data_dir(small_corpus)), "--out", str(out), "--jobs", "2"]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1 and doc["kind"] == "snr_profile"
    assert len(doc["result"]["per_utterance"]) == len(small_corpus)
    assert doc["config"]["jobs"] == 2 and len(doc["inputs"]) == 1
    assert out.with_suffix(".csv").read_text().startswith("utt_id,snr_db,signal_db,noise_db\n")


def test_profile_snr_missing_wav_scp(tmp_path, capsys):
    (tmp_path / "d").mkdir()
    (tmp_path / "d" / "text").write_text("a b\n")
    assert main(["profile-snr", "--data", str(tmp_path / "d"), "--out", str(tmp_path / "r.json")]) == 1
    assert "wav.scp" in capsys.readouterr().err


def test_profile_snr_partial(tmp_path, small_corpus):
    m = load_manifest(data_dir(small_corpus))
    broken = list(m)[:3]
    broken.append(broken[0].replace(utt_id="zz_missing", audio_path=tmp_path / "nope.wav"))
    from noisebench.manifest import CorpusManifest

    save_manifest(CorpusManifest(broken, "x"), tmp_path / "d")
    out = tmp_path / "r.json"
    assert main(["profile-snr", "--data", str(tmp_path / "d"), "--out", str(out)]) == 2
    assert "zz_missing" in json.loads(out.read_text())["result"]["failures"]
    assert main(["profile-snr", "--data", str(tmp_path / "d"), "--out", str(out), "--strict"]) == 1


def test_report_payload_deterministic(tmp_path, small_corpus):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["profile-snr", "--data", str(data_dir(small_corpus)), "--jobs", "1", "--out"]
    assert main(args + [str(a)]) == 0 and main(args + [str(b)]) == 0
    pa, pb = payload(json.loads(a.read_text())), payload(json.loads(b.read_text()))
    pa["config"].pop("out"), pb["config"].pop("out")
    assert pa == pb


def test_mix_five_conditions(tmp_path, small_corpus, noise_file, capsys):
    root = tmp_path / "noisy"
    args = ["mix", "--data", str(data_dir(small_corpus)), "--noise", str(noise_file), "--snr", "20,15,10,5,0",
            "--out-root", str(root), "--seed", "3", "--jobs", "2"]
    assert main(args) == 0
    dirs = sorted(p.name for p in root.iterdir())
    assert dirs == sorted(f"{data_dir(small_corpus).name}_snr{t}" for t in (20, 15, 10, 5, 0))
    for d in root.iterdir():
        m = load_manifest(d)
        assert len(m) == len(small_corpus)
        assert (d / "mix_plan.json").is_file() and (d / "mix_report.json").is_file()
    before = wav_digests(root / f"{data_dir(small_corpus).name}_snr10")
    # rerun refuses without --force, then overwrites identically
    assert main(args) == 1
    assert main(args + ["--force"]) == 0
    assert wav_digests(root / f"{data_dir(small_corpus).name}_snr10") == before


def test_mix_refuses_foreign_dir(tmp_path, small_corpus, noise_file):
    foreign = tmp_path / "root" / f"{data_dir(small_corpus).name}_snr10"
    foreign.mkdir(parents=True)
    (foreign / "keep.txt").write_text("mine")
    args = ["mix", "--data", str(data_dir(small_corpus)), "--noise", str(noise_file), "--snr", "10",
            "--out-root", str(tmp_path / "root"), "--force"]
    assert main(args) == 1
    assert (foreign / "keep.txt").read_text() == "mine"


def test_mix_then_profile_round_trip(tmp_path, small_corpus, noise_file):
    root = tmp_path / "noisy"
    assert main(["mix", "--data", str(data_dir(small_corpus)), "--noise", str(noise_file), "--snr", "10",
                 "--out-root", str(root)]) == 0
    out = tmp_path / "p.json"
    assert main(["profile-snr", "--data", str(root / f"{data_dir(small_corpus).name}_snr10"), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["result"]["mean_db"] == pytest.approx(10.0, abs=1.5)


def test_make_multi(tmp_path, capsys):
    clean = synth.duration_manifest(60, 6, 0.25, seed=1, label="train")
    save_manifest(clean, tmp_path / "train")
    noisy_dirs = []
    for t in (20, 15, 10, 5, 0):
        d = tmp_path / f"train_snr{t}"
        save_manifest(type(clean)([u.replace(utt_id=f"{u.utt_id}_snr{t}") for u in clean], d.name), d)
        noisy_dirs.append(str(d))
    out = tmp_path / "multi"
    assert main(["make-multi", "--clean", str(tmp_path / "train"), "--noisy", *noisy_dirs, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert f"{6 * 60} utterances" in printed and f"{6 * 0.25:.4f} hours" in printed
    assert load_manifest(out).total_hours() == 6 * 0.25

    assert main(["make-multi", "--clean", str(tmp_path / "train"), "--noisy", noisy_dirs[0], noisy_dirs[0],
                 "--out", str(tmp_path / "dup")]) == 1
    assert main(["make-multi", "--clean", str(tmp_path / "train"), "--out", str(tmp_path / "only")]) == 0
    only = load_manifest(tmp_path / "only")
    assert only.utterances == load_manifest(tmp_path / "train").utterances


def test_subset(tmp_path):
    m = synth.duration_manifest(300, 6, 0.5, seed=2, label="train")
    save_manifest(m, tmp_path / "train")
    assert main(["subset", "--data", str(tmp_path / "train"), "--hours", "0.5", "--out", str(tmp_path / "all")]) == 0
    assert load_manifest(tmp_path / "all").utterances == load_manifest(tmp_path / "train").utterances
    assert main(["subset", "--data", str(tmp_path / "train"), "--hours", "0.2", "--seed", "4",
                 "--out", str(tmp_path / "part")]) == 0
    rep = json.loads((tmp_path / "part" / "subset_report.json").read_text())
    assert rep["result"]["hours"] >= 0.2
    assert main(["subset", "--data", str(tmp_path / "train"), "--hours", "9", "--out", str(tmp_path / "x")]) == 1


def test_score_identity(tmp_path, capsys):
    m = synth.duration_manifest(20, 2, 0.01, seed=3, label="test")
    save_manifest(m, tmp_path / "test")
    out = tmp_path / "s.json"
    assert main(["score", "--ref", str(tmp_path / "test"), "--hyp", str(tmp_path / "test" / "text"),
                 "--label", "clean", "--out", str(out), "--align-dump", str(tmp_path / "ali.txt")]) == 0
    assert "CER 0.000" in capsys.readouterr().out
    assert ScoreReport.from_dict(json.loads(out.read_text())["result"]).cer == 0.0
    assert len((tmp_path / "ali.txt").read_text().splitlines()) == 3 * 20


def write_table_reports(tmp_path):
    paths = {}
    for engine, cers in TABLE.items():
        paths[engine] = []
        for label, cer in zip(CONDITIONS, cers):
            p = tmp_path / f"{engine}_{label}.json"
            rep = ScoreReport.from_cer(cer / 100, 1000, label, engine)
            p.write_text(rep.to_json())
            paths[engine].append(str(p))
    return paths


def test_compare_prints_published_layout(tmp_path, capsys):
    paths = write_table_reports(tmp_path)
    out = tmp_path / "sig.json"
    assert main(["compare", "--baseline", *paths["Eng2"], *paths["Eng4"], "--candidate", *paths["Custom"],
                 "--n-units", "7176", "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    sdev = next(line for line in lines if line.startswith("sdev")).split()[1:]
    nsd = next(line for line in lines if line.startswith("#sdev")).split()[1:]
    assert sdev == ["0.25", "0.30", "0.35", "0.44", "0.54", "0.58"]
    assert nsd == ["-7.6", "-1.4", "4.3", "16", "24", "10"]
    assert lines[0].split() == ["ASR", *CONDITIONS]
    rows = json.loads(out.read_text())["result"]["rows"]
    assert [r["significant"] for r in rows] == [False, False, True, True, True, True]


def test_bad_args_exit_one(capsys):
    assert main(["mix", "--snr", "abc"]) == 1
    assert main([]) == 1
