#!/usr/bin/env python3
"""Regenerate the frozen metrics fixture used by the CLI byte-exactness test.

Writes a synthetic run CSV and the summary the `metrics` subcommand must
reproduce byte-for-byte.  Only rerun this when the metrics schema changes,
and commit both outputs together.
"""

from pathlib import Path

import numpy as np

from osclab import metrics

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"


def synthetic_rows():
    rng = np.random.default_rng(2024)
    rows = []
    quality = {"open_loop_full": 0.95, "open_loop_no_swing": 0.7, "random": 0.0}
    spans = {"desk_a": (0.0, 8.0), "desk_b": (-3.0, 12.0)}
    for env, (lo, hi) in spans.items():
        for method, q in quality.items():
            for seed in range(6):
                for generation in range(3):
                    ramp = (generation + 1) / 3.0
                    value = lo + q * ramp * (hi - lo) + rng.normal(0.0, 0.2)
                    rows.append(
                        {
                            "env": env,
                            "method": method,
                            "variant": method.removeprefix("open_loop_") or "none",
                            "seed": seed,
                            "generation": generation,
                            "return": round(float(value), 6),
                        }
                    )
    return rows


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rows = synthetic_rows()
    metrics.write_scores_csv(FIXTURES / "scores.csv", rows)

    scores = metrics.final_scores(metrics.read_scores_csv([FIXTURES / "scores.csv"]))
    anchors = metrics.anchors_from_scores(scores)
    report = metrics.aggregate(
        metrics.ScoreTable(returns=scores, anchors=anchors),
        improvement_baseline="open_loop_full",
    )
    metrics.write_report(report, FIXTURES / "expected")
    print(f"fixture written under {FIXTURES}")


if __name__ == "__main__":
    main()
