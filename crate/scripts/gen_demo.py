#!/usr/bin/env python3
"""Generate the demonstration trial log and its decision matrix.

The matrix is computed here with a plain batch average, independently of
the Rust incremental update, and serves as the golden file for ingestion.

    python3 scripts/gen_demo.py fixtures/
"""
import json
import random
import sys
from pathlib import Path

T_MAX = 5
TRIALS_PER_CELL = 10
FLAT = 0.95

# Mean unfolding reward a human demonstrator reaches per seam type pair
# (1 shoulder, 2 bottom hem, 3 neck point, 4 solid, 5 dotted, 6 neckline).
# Humans are good with crossings in general and especially with the
# shoulder-to-hem corner grasp, which works far less well for a robot.
HUMAN_SKILL = {
    (2, 1): 0.86, (1, 1): 0.84, (3, 3): 0.82, (2, 2): 0.80, (3, 1): 0.78,
    (6, 1): 0.74, (4, 4): 0.72, (5, 4): 0.70, (5, 5): 0.68, (6, 6): 0.66,
    (4, 1): 0.66, (5, 1): 0.64, (6, 3): 0.62, (3, 2): 0.62, (4, 2): 0.60,
    (5, 2): 0.60, (4, 3): 0.58, (5, 3): 0.58, (6, 4): 0.56, (6, 5): 0.56,
    (6, 2): 0.54,
}


def demo_trial(rng, skill):
    start = rng.uniform(0.35, 0.6)
    plateau = min(0.99, max(0.3, skill + 0.1 + rng.gauss(0.0, 0.05)))
    raw = []
    for t in range(T_MAX):
        v = round(plateau - (plateau - start) * 0.5 ** t, 3)
        raw.append(v)
        if v >= FLAT:
            break
    return raw


def padded(raw):
    return raw + [raw[-1]] * (T_MAX - len(raw))


def main(out_dir):
    out = Path(out_dir)
    rng = random.Random(20240607)
    lines = []
    sums = {}
    for (k, l), skill in sorted(HUMAN_SKILL.items()):
        for i in range(TRIALS_PER_CELL):
            raw = demo_trial(rng, skill)
            # every third trial is stored already padded
            stored = padded(raw) if i % 3 == 2 else raw
            lines.append({
                "schema_version": 1,
                "csst": [k, l],
                "ncov_per_step": stored,
                "completed_at_step": len(raw),
                "t_max": T_MAX,
            })
            sums.setdefault((k, l), []).append(sum(padded(raw)) / T_MAX)
    rng.shuffle(lines)
    with open(out / "demo_trials.jsonl", "w") as f:
        for rec in lines:
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")
    cells = [
        {"k": k, "l": l, "u": sum(rs) / len(rs), "M": len(rs)}
        for (k, l), rs in sorted(sums.items())
    ]
    matrix = {"schema_version": 1, "label": "init", "T_max": T_MAX, "cells": cells}
    with open(out / "init_matrix.json", "w") as f:
        json.dump(matrix, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
