"""Recompute the sdev row of the engine comparison table under candidate sample sizes.

Standalone on purpose: no imports from noisebench, so it can confirm which
sample size reproduces the printed standard deviations before the scoring
code is trusted with it.
"""

import math

CONDITIONS = ["clean", "20dB", "15dB", "10dB", "5dB", "0dB"]
ENG2 = [4.7, 6.7, 9.6, 17, 35, 52]
ENG4 = [7.2, 9.7, 12, 19, 30, 40]
CUSTOM = [6.6, 7.1, 8.1, 10, 17, 34]
PRINTED_SDEV = [0.25, 0.30, 0.35, 0.44, 0.54, 0.58]

# test split of the corpus: utterances, and a rough character count
# (~14.6 characters per utterance is typical for the corpus transcripts)
CANDIDATES = {"test utterances": 7176, "test characters (approx)": 104765}


def sdev_row(n):
    row = []
    for a, b in zip(ENG2, ENG4):
        p = min(a, b) / 100.0
        row.append(100.0 * math.sqrt(p * (1.0 - p) / n))
    return row


def main():
    for name, n in CANDIDATES.items():
        row = sdev_row(n)
        worst = max(abs(x - y) for x, y in zip(row, PRINTED_SDEV))
        verdict = "MATCH" if worst <= 0.01 else "no match"
        print(f"{name:28s} n={n:7d} sdev=" + " ".join(f"{x:.3f}" for x in row) + f"  max|err|={worst:.3f} {verdict}")
    row = sdev_row(CANDIDATES["test utterances"])
    nsd = [(min(a, b) - c) / s for a, b, c, s in zip(ENG2, ENG4, CUSTOM, row)]
    print("#sdev at n=7176: " + " ".join(f"{c}:{x:+.2f}" for c, x in zip(CONDITIONS, nsd)))


if __name__ == "__main__":
    main()
