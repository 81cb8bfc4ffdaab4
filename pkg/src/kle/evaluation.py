"""Selective-prediction evaluation of uncertainty scores.

Uncertainty is meant to predict *incorrect* answers: AUROC treats the
incorrect examples as the positive class.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateLabels, NoCommonScenarios, TooFewExamples, ValidationError

METRICS = ("auroc", "auarc")
MAX_REDRAWS = 100


def _inputs(uncertainties, correct) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(uncertainties, dtype=float)
    y = np.asarray(correct, dtype=bool)
    if u.ndim != 1 or u.shape != y.shape:
        raise ValidationError("uncertainties and labels must be 1-d and of equal length")
    if not np.all(np.isfinite(u)):
        raise ValidationError("uncertainties must be finite")
    return u, y


def auroc(uncertainties, correct) -> float:
    """P(an incorrect example is more uncertain than a correct one), ties count 1/2.

    Computed from the Mann-Whitney rank statistic.
    """
    u, y = _inputs(uncertainties, correct)
    n_pos = int((~y).sum())
    n_neg = int(y.sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUROC needs both correct and incorrect examples")
    ranks = rankdata(u)  # average ranks give ties half credit
    U = ranks[~y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(U / (n_pos * n_neg))


def auarc(uncertainties, correct) -> float:
    """Area under the accuracy-rejection curve.

    Examples are sorted by increasing uncertainty (stable, so ties keep input
    order); the result is the mean over k of the accuracy of the k least
    uncertain examples.
    """
    u, y = _inputs(uncertainties, correct)
    if u.size == 0:
        raise TooFewExamples("AUARC needs at least one example")
    order = np.argsort(u, kind="stable")
    hits = np.cumsum(y[order])
    return float(np.mean(hits / np.arange(1, u.size + 1)))


METRIC_FUNCS: dict[str, Callable] = {"auroc": auroc, "auarc": auarc}


def bootstrap_indices(
    correct: Sequence[bool],
    resamples: int = 1000,
    seed: int = 0,
    require_both_classes: bool = True,
) -> tuple[list[np.ndarray], int]:
    """Resample indices with replacement, one generator per ``(seed, b)``.

    Single-class resamples are redrawn up to ``MAX_REDRAWS`` times and then
    skipped. Returns the index arrays and the number of skipped resamples.
    """
    y = np.asarray(correct, dtype=bool)
    n = y.size
    if n < 2:
        raise TooFewExamples("bootstrap needs at least two examples")
    out, skipped = [], 0
    for b in range(resamples):
        rng = np.random.default_rng([seed, b])
        for _ in range(MAX_REDRAWS + 1):
            idx = rng.integers(0, n, n)
            if not require_both_classes or 0 < y[idx].sum() < n:
                out.append(idx)
                break
        else:
            skipped += 1
    return out, skipped


def _percentile_ci(values, point: float) -> tuple[float, float]:
    if len(values) == 0:
        return (point, point)
    lo, hi = np.percentile(values, [2.5, 97.5])
    # percentile bounds can miss the full-sample point on skewed samples
    return (min(float(lo), point), max(float(hi), point))


def bootstrap_ci(
    metric: str | Callable,
    uncertainties,
    correct,
    resamples: int = 1000,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Percentile (2.5, 97.5) bootstrap interval: ``(low, point, high)``."""
    fn = METRIC_FUNCS[metric] if isinstance(metric, str) else metric
    u, y = _inputs(uncertainties, correct)
    point = fn(u, y)
    idxs, _ = bootstrap_indices(y, resamples, seed, require_both_classes=fn is auroc)
    vals = [fn(u[i], y[i]) for i in idxs]
    lo, hi = _percentile_ci(vals, point)
    return (lo, point, hi)


@dataclass(frozen=True)
class Interval:
    low: float
    point: float
    high: float

    def to_dict(self) -> dict:
        return {"point": self.point, "lo": self.low, "hi": self.high}


@dataclass
class ScenarioReport:
    scenario_id: str
    n_examples: int
    results: dict[str, dict[str, Interval]] = field(default_factory=dict)  # method -> metric -> CI
    resamples: int = 0
    skipped_resamples: int = 0
    seed: int = 0

    @property
    def methods(self) -> list[str]:
        return list(self.results)

    def value(self, method: str, metric: str) -> float:
        return self.results[method][metric].point

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "scenario_id": self.scenario_id,
            "n_examples": self.n_examples,
            "resamples": self.resamples,
            "skipped_resamples": self.skipped_resamples,
            "seed": self.seed,
            "methods": {
                m: {k: iv.to_dict() for k, iv in r.items()} for m, r in self.results.items()
            },
        }

    def csv_rows(self) -> Iterator[tuple]:
        for m, r in self.results.items():
            for k, iv in r.items():
                yield (self.scenario_id, m, k, iv.point, iv.low, iv.high)


def evaluate_scenario(
    scenario_id: str,
    scores: Mapping[str, Sequence[float]],
    correct: Sequence[bool],
    resamples: int = 1000,
    seed: int = 0,
) -> ScenarioReport:
    """AUROC and AUARC with bootstrap intervals for every method.

    All methods share the same resampled examples so their intervals can be
    compared pairwise.
    """
    y = np.asarray(correct, dtype=bool)
    if y.size < 2:
        raise TooFewExamples(f"{scenario_id}: need at least two examples")
    if y.all() or not y.any():
        raise DegenerateLabels(f"{scenario_id}: labels are all {'correct' if y.all() else 'incorrect'}")
    idxs, skipped = bootstrap_indices(y, resamples, seed) if resamples else ([], 0)
    report = ScenarioReport(scenario_id, int(y.size), resamples=resamples, skipped_resamples=skipped, seed=seed)
    for method, vals in scores.items():
        u, _ = _inputs(vals, y)
        report.results[method] = {}
        for name in METRICS:
            fn = METRIC_FUNCS[name]
            point = fn(u, y)
            lo, hi = _percentile_ci([fn(u[i], y[i]) for i in idxs], point)
            report.results[method][name] = Interval(lo, point, hi)
    return report


@dataclass
class WinRateMatrix:
    methods: list[str]
    fractions: np.ndarray  # fractions[a, b]: share of scenarios where a beats b
    wins: np.ndarray  # strict wins
    ties: np.ndarray
    n_scenarios: np.ndarray
    metric: str
    alpha: float = 0.05

    def p_values(self) -> np.ndarray:
        k = len(self.methods)
        P = np.full((k, k), np.nan)
        for a in range(k):
            for b in range(k):
                if a != b:
                    P[a, b] = binomial_significance(int(self.wins[a, b]), int(self.n_scenarios[a, b]))
        return P

    def to_dict(self) -> dict:
        P = self.p_values()
        return {
            "schema_version": 1,
            "metric": self.metric,
            "methods": self.methods,
            "fractions": self.fractions.tolist(),
            "wins": self.wins.astype(int).tolist(),
            "ties": self.ties.astype(int).tolist(),
            "n_scenarios": self.n_scenarios.astype(int).tolist(),
            "p_values": [[None if math.isnan(x) else x for x in row] for row in P.tolist()],
            "significance_level": self.alpha,
        }


def win_rate(reports: Sequence[ScenarioReport], metric: str = "auroc", methods: Sequence[str] | None = None) -> WinRateMatrix:
    """Pairwise fraction of scenarios in which the row method beats the column
    method on ``metric``; exact ties give 1/2 to both, the diagonal is 1/2."""
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}")
    if methods is None:
        methods = list(dict.fromkeys(m for r in reports for m in r.methods))
    k = len(methods)
    F = np.full((k, k), 0.5)
    wins = np.zeros((k, k))
    ties = np.zeros((k, k))
    cnt = np.zeros((k, k))
    for a, ma in enumerate(methods):
        for b, mb in enumerate(methods):
            if a == b:
                continue
            common = [r for r in reports if ma in r.results and mb in r.results]
            if not common:
                raise NoCommonScenarios(f"no scenario scores both {ma} and {mb}")
            va = np.array([r.value(ma, metric) for r in common])
            vb = np.array([r.value(mb, metric) for r in common])
            wins[a, b] = (va > vb).sum()
            ties[a, b] = (va == vb).sum()
            cnt[a, b] = len(common)
            F[a, b] = (wins[a, b] + 0.5 * ties[a, b]) / len(common)
    return WinRateMatrix(list(methods), F, wins, ties, cnt, metric)


def binomial_significance(wins: int, n: int, p0: float = 0.5) -> float:
    """One-sided exact binomial tail ``P(X >= wins)`` for ``X ~ Bin(n, p0)``."""
    if not 0 <= wins <= n:
        raise ValidationError(f"need 0 <= wins <= n, got {wins}, {n}")
    return float(sum(math.comb(n, k) * p0**k * (1 - p0) ** (n - k) for k in range(wins, n + 1)))


def write_reports_json(path, reports: Sequence[ScenarioReport], win_rates: Sequence[WinRateMatrix] = ()) -> None:
    doc = {
        "schema_version": 1,
        "scenarios": [r.to_dict() for r in reports],
        "win_rates": [w.to_dict() for w in win_rates],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_reports_csv(path, reports: Sequence[ScenarioReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "method", "metric", "point", "lo", "hi"))
        for r in reports:
            w.writerows(r.csv_rows())
