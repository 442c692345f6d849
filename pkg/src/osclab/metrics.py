"""Score normalization and aggregate statistics for run tables.

Scores live in a table keyed ``(env, method, seed)``.  Per-environment
anchors map raw returns onto ``[0, 1]``-ish normalized scores: the anchor
minimum is a random policy's return and the anchor maximum is the best
open-loop run, which therefore normalizes to 1 by construction.

Aggregates follow the usual evaluation-statistics conventions: median and
interquartile mean with stratified-bootstrap confidence intervals,
performance profiles (fraction of runs whose normalized score exceeds each
threshold), and pairwise probability of improvement with ties counted half.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

DEFAULT_TAU_GRID = tuple(np.linspace(0.0, 2.0, 41))
DEFAULT_RESAMPLES = 2000
DEFAULT_LEVEL = 0.95

ScoreKey = tuple[str, str, int]  # (env, method, seed)

CSV_HEADER = ["env", "method", "variant", "seed", "generation", "return"]


@dataclass(frozen=True)
class ScoreTable:
    """Episodic returns keyed (env, method, seed) plus per-env anchors."""

    returns: Mapping[ScoreKey, float]
    anchors: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        for env, (r_min, r_max) in self.anchors.items():
            if r_max == r_min:
                raise ValueError(f"anchors for {env!r} are degenerate: {r_min} == {r_max}")

    @property
    def methods(self) -> list[str]:
        return sorted({m for (_, m, _) in self.returns})

    @property
    def envs(self) -> list[str]:
        return sorted({e for (e, _, _) in self.returns})

    def scores_for(self, method: str, normalized: Mapping[ScoreKey, float] | None = None):
        source = self.returns if normalized is None else normalized
        keys = sorted(k for k in source if k[1] == method)
        return np.array([source[k] for k in keys])

    def strata_for(self, method: str, normalized: Mapping[ScoreKey, float] | None = None):
        """Per-env arrays of this method's scores, seed-sorted (bootstrap strata)."""
        source = self.returns if normalized is None else normalized
        strata = []
        for env in self.envs:
            keys = sorted(k for k in source if k[0] == env and k[1] == method)
            if keys:
                strata.append(np.array([source[k] for k in keys]))
        return strata


def normalize(table: ScoreTable) -> dict[ScoreKey, float]:
    """Affine per-env map: anchor minimum -> 0, anchor maximum -> 1."""
    out = {}
    for (env, method, seed), value in table.returns.items():
        if env not in table.anchors:
            raise ValueError(f"no normalization anchors for environment {env!r}")
        r_min, r_max = table.anchors[env]
        out[(env, method, seed)] = (value - r_min) / (r_max - r_min)
    return out


def iqm(scores: Sequence[float]) -> float:
    """Interquartile mean: sort, drop floor(n/4) from each end, average."""
    values = np.sort(np.asarray(scores, dtype=float))
    if values.size == 0:
        raise ValueError("iqm of an empty sequence")
    drop = values.size // 4
    kept = values[drop : values.size - drop]
    return float(np.mean(kept))


def performance_profile(
    scores_by_method: Mapping[str, Sequence[float]],
    tau_grid: Sequence[float] = DEFAULT_TAU_GRID,
) -> dict[str, np.ndarray]:
    """F(tau) = fraction of runs with normalized score strictly above tau."""
    tau = np.asarray(tau_grid, dtype=float)
    if np.any(np.diff(tau) < 0):
        raise ValueError("tau grid must be sorted ascending")
    curves = {}
    for method, scores in scores_by_method.items():
        values = np.asarray(scores, dtype=float)
        curves[method] = (values[None, :] > tau[:, None]).mean(axis=1)
    return curves


def probability_of_improvement(x_scores, y_scores) -> float:
    """Mean over all pairs of [x > y], ties counted 1/2."""
    x = np.asarray(x_scores, dtype=float)
    y = np.asarray(y_scores, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("probability_of_improvement needs non-empty samples")
    wins = int(np.sum(x[:, None] > y[None, :]))
    ties = int(np.sum(x[:, None] == y[None, :]))
    return (2 * wins + ties) / (2 * x.size * y.size)


def bootstrap_ci(
    statistic: Callable[[np.ndarray], float],
    strata: Sequence[np.ndarray],
    n_resamples: int = DEFAULT_RESAMPLES,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap, resampling with replacement within each stratum."""
    if n_resamples < 100:
        raise ValueError("use at least 100 resamples")
    strata = [np.asarray(s, dtype=float) for s in strata if len(s)]
    if not strata:
        raise ValueError("bootstrap needs at least one non-empty stratum")
    rng = np.random.default_rng(seed)
    stats = np.empty(n_resamples)
    for r in range(n_resamples):
        parts = [s[rng.integers(0, len(s), size=len(s))] for s in strata]
        stats[r] = statistic(np.concatenate(parts))
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


@dataclass(frozen=True)
class EvalReport:
    """Raw scores plus whatever aggregates the anchors allowed computing."""

    scores: dict[ScoreKey, float]
    anchors: dict[str, tuple[float, float]]
    normalized: dict[ScoreKey, float] | None = None
    iqm_by_method: dict[str, tuple[float, float, float]] | None = None
    median_by_method: dict[str, tuple[float, float, float]] | None = None
    tau_grid: tuple[float, ...] | None = None
    profiles: dict[str, tuple[float, ...]] | None = None
    improvement: dict[str, tuple[float, float, float]] | None = None

    def to_json_dict(self) -> dict:
        def keyed(mapping):
            return {f"{e}|{m}|{s}": v for (e, m, s), v in sorted(mapping.items())}

        return {
            "version": 1,
            "scores": keyed(self.scores),
            "anchors": {k: list(v) for k, v in sorted(self.anchors.items())},
            "normalized": keyed(self.normalized) if self.normalized is not None else None,
            "iqm": {k: list(v) for k, v in sorted((self.iqm_by_method or {}).items())},
            "median": {k: list(v) for k, v in sorted((self.median_by_method or {}).items())},
            "tau_grid": list(self.tau_grid) if self.tau_grid is not None else None,
            "profiles": {k: list(v) for k, v in sorted((self.profiles or {}).items())},
            "improvement": {k: list(v) for k, v in sorted((self.improvement or {}).items())},
        }


def aggregate(
    table: ScoreTable,
    tau_grid: Sequence[float] = DEFAULT_TAU_GRID,
    n_resamples: int = DEFAULT_RESAMPLES,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
    improvement_baseline: str | None = None,
) -> EvalReport:
    """Normalize, aggregate per method, and compare methods pairwise."""
    normalized = normalize(table) if table.anchors else None
    if normalized is None:
        return EvalReport(scores=dict(table.returns), anchors=dict(table.anchors))

    iqm_by_method = {}
    median_by_method = {}
    profile_input = {}
    for method in table.methods:
        strata = table.strata_for(method, normalized)
        pooled = table.scores_for(method, normalized)
        profile_input[method] = pooled
        iqm_lo, iqm_hi = bootstrap_ci(iqm, strata, n_resamples, level, seed)
        med_lo, med_hi = bootstrap_ci(np.median, strata, n_resamples, level, seed)
        iqm_by_method[method] = (iqm(pooled), iqm_lo, iqm_hi)
        median_by_method[method] = (float(np.median(pooled)), med_lo, med_hi)

    profiles = {
        m: tuple(curve) for m, curve in performance_profile(profile_input, tau_grid).items()
    }

    improvement = {}
    baseline = improvement_baseline
    if baseline is None and len(table.methods) > 1:
        baseline = table.methods[0]
    if baseline is not None:
        x = table.scores_for(baseline, normalized)
        x_strata = table.strata_for(baseline, normalized)
        for method in table.methods:
            if method == baseline:
                continue
            y = table.scores_for(method, normalized)
            y_strata = table.strata_for(method, normalized)
            p = probability_of_improvement(x, y)
            lo, hi = _poi_bootstrap(x_strata, y_strata, n_resamples, level, seed)
            improvement[f"{baseline}|{method}"] = (p, lo, hi)

    return EvalReport(
        scores=dict(table.returns),
        anchors=dict(table.anchors),
        normalized=normalized,
        iqm_by_method=iqm_by_method,
        median_by_method=median_by_method,
        tau_grid=tuple(float(t) for t in tau_grid),
        profiles=profiles,
        improvement=improvement,
    )


def _poi_bootstrap(x_strata, y_strata, n_resamples, level, seed):
    rng = np.random.default_rng(seed)
    stats = np.empty(n_resamples)
    for r in range(n_resamples):
        x = np.concatenate([s[rng.integers(0, len(s), size=len(s))] for s in x_strata])
        y = np.concatenate([s[rng.integers(0, len(s), size=len(s))] for s in y_strata])
        stats[r] = probability_of_improvement(x, y)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# CSV schema: env,method,variant,seed,generation,return (UTF-8, LF, header).


def write_scores_csv(path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_scores_csv(paths: Iterable) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != CSV_HEADER:
                raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
            for row in reader:
                row["seed"] = int(row["seed"])
                row["generation"] = int(row["generation"])
                row["return"] = float(row["return"])
                rows.append(row)
    return rows


def final_scores(rows: Iterable[dict]) -> dict[ScoreKey, float]:
    """Keep each (env, method, seed)'s return at its highest generation."""
    best_gen: dict[ScoreKey, int] = {}
    out: dict[ScoreKey, float] = {}
    for row in rows:
        key = (row["env"], row["method"], row["seed"])
        if key not in best_gen or row["generation"] >= best_gen[key]:
            best_gen[key] = row["generation"]
            out[key] = row["return"]
    return out


def anchors_from_scores(
    scores: Mapping[ScoreKey, float],
    min_method: str = "random",
    max_method: str = "open_loop_full",
) -> dict[str, tuple[float, float]]:
    """Per-env anchors: mean of the random policy, max of the open-loop runs."""
    anchors = {}
    envs = {e for (e, _, _) in scores}
    for env in sorted(envs):
        mins = [v for (e, m, _), v in scores.items() if e == env and m == min_method]
        maxs = [v for (e, m, _), v in scores.items() if e == env and m == max_method]
        if not mins or not maxs:
            raise ValueError(
                f"environment {env!r} lacks anchor methods {min_method!r}/{max_method!r}"
            )
        anchors[env] = (float(np.mean(mins)), float(np.max(maxs)))
    return anchors


def write_report(report: EvalReport, out_dir) -> None:
    """summary.json plus flat CSVs for profiles and aggregates."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "summary.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(report.to_json_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    if report.profiles is not None:
        with open(out_dir / "profiles.csv", "w", encoding="utf-8", newline="\n") as handle:
            handle.write("method,tau,fraction\n")
            for method in sorted(report.profiles):
                for tau, frac in zip(report.tau_grid, report.profiles[method]):
                    handle.write(f"{method},{tau!r},{frac!r}\n")
    if report.iqm_by_method is not None:
        with open(out_dir / "aggregates.csv", "w", encoding="utf-8", newline="\n") as handle:
            handle.write("method,iqm,iqm_lo,iqm_hi,median,median_lo,median_hi\n")
            for method in sorted(report.iqm_by_method):
                iq = report.iqm_by_method[method]
                md = report.median_by_method[method]
                handle.write(
                    f"{method},{iq[0]!r},{iq[1]!r},{iq[2]!r},{md[0]!r},{md[1]!r},{md[2]!r}\n"
                )
