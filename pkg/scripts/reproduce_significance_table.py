"""Rebuild the engine-comparison significance table from published CERs.

Usage: python3 scripts/reproduce_significance_table.py [--n-units 7176] [--out table.json]
"""

import argparse
import json

from noisebench.score import ScoreReport, compare_conditions

CONDITIONS = ["clean", "20dB", "15dB", "10dB", "5dB", "0dB"]
PUBLISHED = {
    "Eng2": [4.7, 6.7, 9.6, 17, 35, 52],
    "Eng4": [7.2, 9.7, 12, 19, 30, 40],
    "Custom": [6.6, 7.1, 8.1, 10, 17, 34],
}


def build(n_units: int):
    def reports(engine):
        # 1000 reference units makes every published percentage an integer error count
        return [ScoreReport.from_cer(c / 100, 1000, lbl, engine) for c, lbl in zip(PUBLISHED[engine], CONDITIONS)]

    return compare_conditions(reports("Eng2") + reports("Eng4"), reports("Custom"), n_units)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n-units", type=int, default=7176)
    ap.add_argument("--out", default=None, help="optional JSON dump of the rows")
    args = ap.parse_args()
    sig = build(args.n_units)
    print(sig.format_table(), end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(sig.to_dict(), f, indent=2)


if __name__ == "__main__":
    main()
