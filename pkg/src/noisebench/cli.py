"""Command line entry point: noisebench <subcommand> [flags].

Exit codes: 0 success, 1 fatal error, 2 completed with per-utterance failures.

CSV columns
  profile-snr: utt_id, snr_db, signal_db, noise_db
  score:       utt_id, ref_len, S, D, I, C, cer (last row TOTAL)
  compare:     condition, baseline_cer, candidate_cer, n_units, sdev, num_sdev, significant
"""

from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
from pathlib import Path

from . import manifest as mf
from .audio import read_wav
from .mixer import PLAN_FILENAME, mix_corpus
from .reports import envelope, read_result, write_report
from .score import ScoreReport, compare_conditions, format_alignment, read_hypotheses, score_corpus
from .snr import corpus_snr_profile

log = logging.getLogger("noisebench")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def default_jobs() -> int:
    env = os.environ.get("NOISEBENCH_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _config(args) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k != "func"}


def _csv_path(out: Path) -> Path:
    return out.with_suffix(".csv")


def cmd_profile_snr(args) -> int:
    manifest = mf.load_manifest(args.data)
    profile = corpus_snr_profile(manifest, partial=not args.strict, jobs=args.jobs)
    result = profile.to_dict()
    write_report(envelope("snr_profile", _config(args), {"data": args.data}, result), args.out)
    _csv_path(args.out).write_text(profile.to_csv(), encoding="utf-8")
    if profile.estimates:
        print(f"{manifest.label}: {len(profile.estimates)} utterances, mean SNR {profile.mean_db:.2f} dB, "
              f"stddev {profile.stddev_db:.2f} dB")
    if profile.failures:
        print(f"{len(profile.failures)} utterance(s) failed: {', '.join(profile.failures)}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def parse_snr_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated dB values, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("no SNR values given")
    return values


def cmd_mix(args) -> int:
    clean = mf.load_manifest(args.data)
    noise = read_wav(args.noise)
    base = clean.label or "data"
    targets = [(t, args.out_root / f"{base}{mf.snr_suffix(t)}") for t in args.snr]
    for _, out_dir in targets:
        if out_dir.exists() and any(out_dir.iterdir()):
            if not args.force:
                print(f"error: {out_dir} exists; pass --force to overwrite", file=sys.stderr)
                return EXIT_FATAL
            if not (out_dir / PLAN_FILENAME).is_file():
                # never delete a directory this tool did not create
                print(f"error: refusing to overwrite {out_dir}: it is not a mix output directory", file=sys.stderr)
                return EXIT_FATAL
    status = EXIT_OK
    for target, out_dir in targets:
        if out_dir.exists():
            shutil.rmtree(out_dir)
        noisy, plan = mix_corpus(clean, noise, target, args.seed, out_dir, args.sample_size, args.jobs,
                                 label=out_dir.name)
        snrs = plan.realized_snrs()
        summary = {
            "target_snr_db": plan.target_snr_db,
            "noise_gain": plan.noise_gain,
            "utterances": len(noisy),
            "mean_realized_snr_db": float(snrs.mean()),
            "stddev_realized_snr_db": float(snrs.std()),
            "skipped": plan.skipped,
        }
        inputs = {"data": args.data, "noise": args.noise}
        write_report(envelope("mix", _config(args), inputs, summary), out_dir / "mix_report.json")
        print(f"{out_dir.name}: {len(noisy)} utterances, gain {plan.gain_db:+.2f} dB, "
              f"mean realized SNR {snrs.mean():.3f} dB, stddev {snrs.std():.3f} dB")
        if plan.skipped:
            print(f"{out_dir.name}: skipped {len(plan.skipped)}: {', '.join(plan.skipped)}", file=sys.stderr)
            status = EXIT_PARTIAL
    return status


def cmd_make_multi(args) -> int:
    clean = mf.load_manifest(args.clean)
    noisy = [mf.load_manifest(d) for d in args.noisy]
    multi = mf.make_multicondition(clean, noisy, label=args.out.name)
    mf.save_manifest(multi, args.out)
    hours = multi.total_hours(args.jobs)
    print(f"{multi.label}: {len(multi)} utterances, {hours:.4f} hours "
          f"(clean {clean.total_hours(args.jobs):.4f} h x {1 + len(noisy)} conditions)")
    return EXIT_OK


def cmd_subset(args) -> int:
    full = mf.load_manifest(args.data)
    sub = mf.subset_by_hours(full, args.hours, args.seed, label=args.out.name)
    mf.save_manifest(sub, args.out)
    cov = mf.speaker_coverage(sub, full)
    result = {
        "utterances": len(sub),
        "hours": sub.total_hours(),
        "speaker_coverage": cov,
    }
    write_report(envelope("subset", _config(args), {"data": args.data}, result), args.out / "subset_report.json")
    print(f"{sub.label}: {len(sub)} utterances, {result['hours']:.4f} h, "
          f"{cov['speakers_covered']}/{cov['speakers_total']} speakers")
    return EXIT_OK


def cmd_score(args) -> int:
    refs = mf.load_manifest(args.ref)
    hyps = read_hypotheses(args.hyp)
    report = score_corpus(refs, hyps, args.label, ascii_runs=args.ascii_runs, engine=args.engine or "")
    write_report(envelope("score", _config(args), {"ref": args.ref, "hyp": args.hyp}, report.to_dict()), args.out)
    _csv_path(args.out).write_text(report.to_csv(), encoding="utf-8")
    if args.align_dump:
        with open(args.align_dump, "w", encoding="utf-8") as f:
            for k, a in report.per_utterance.items():
                f.write(format_alignment(k, a))
    print(f"{args.label}: CER {report.cer:.3f} ({report.errors}/{report.n_ref}; "
          f"S={report.substitutions} D={report.deletions} I={report.insertions})")
    return EXIT_OK


def _load_score(path: Path) -> ScoreReport:
    report = ScoreReport.from_dict(read_result(path))
    if not report.engine:
        report.engine = path.stem
    return report


def cmd_compare(args) -> int:
    baselines = [_load_score(p) for p in args.baseline]
    candidates = [_load_score(p) for p in args.candidate]
    sig = compare_conditions(baselines, candidates, args.n_units)
    inputs = {"baseline": args.baseline, "candidate": args.candidate}
    write_report(envelope("significance", _config(args), inputs, sig.to_dict()), args.out)
    _csv_path(args.out).write_text(sig.to_csv(), encoding="utf-8")
    print(sig.format_table(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed (default 0)")
    common.add_argument("--jobs", type=int, default=None,
                        help="parallel workers (default: $NOISEBENCH_JOBS or the CPU count)")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="noisebench", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile-snr", parents=[common], help="estimate per-utterance SNR of a data dir")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="JSON report; CSV written next to it")
    p.add_argument("--strict", action="store_true", help="exit 1 instead of 2 when any utterance fails")
    p.set_defaults(func=cmd_profile_snr)

    p = sub.add_parser("mix", parents=[common], help="create noisy copies at calibrated average SNRs")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--noise", type=Path, required=True)
    p.add_argument("--snr", type=parse_snr_list, required=True, help="e.g. 20,15,10,5,0")
    p.add_argument("--out-root", type=Path, required=True)
    p.add_argument("--sample-size", type=int, default=None,
                   help="calibrate on the first N utterances instead of all")
    p.add_argument("--force", action="store_true", help="overwrite existing output dirs")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("make-multi", parents=[common], help="merge clean and noisy data dirs")
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--noisy", type=Path, nargs="*", default=[])
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_make_multi)

    p = sub.add_parser("subset", parents=[common], help="random subset with a duration budget")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--hours", type=float, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_subset)

    p = sub.add_parser("score", parents=[common], help="character error rate of a hypothesis file")
    p.add_argument("--ref", type=Path, required=True, help="reference data dir (text file)")
    p.add_argument("--hyp", type=Path, required=True, help="'<utt_id> <transcript>' lines")
    p.add_argument("--label", required=True, help="condition label, e.g. 15dB")
    p.add_argument("--engine", default=None)
    p.add_argument("--ascii-runs", action="store_true", help="count ASCII alphanumeric runs as one token")
    p.add_argument("--align-dump", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compare", parents=[common], help="binomial significance against the best baseline")
    p.add_argument("--baseline", type=Path, nargs="+", required=True)
    p.add_argument("--candidate", type=Path, nargs="+", required=True)
    p.add_argument("--n-units", type=int, required=True, help="binomial sample size (test utterances)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_FATAL
    if args.jobs is None:
        args.jobs = default_jobs()
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit code 1
        log.debug("fatal", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
