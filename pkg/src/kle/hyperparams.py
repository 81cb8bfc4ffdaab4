"""Entropy convergence curves and lengthscale selection.

A convergence curve tracks the von Neumann entropy of a unit-trace graph
kernel while edges are added one at a time to an initially edgeless graph,
scaled by the edgeless value ``log n`` so that every curve starts at 1.
Lengthscales whose curve collapses early are avoided.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyValidation, NoCandidates, ValidationError
from .evaluation import auroc
from .graph import SemanticGraph
from .kernels import KernelConfig, build_kernel
from .linalg import von_neumann_entropy

SCHEDULES = ("sequential", "random")
CSV_COLUMNS = ("n_vertices", "schedule", "param_name", "param_value", "edge_count", "vne_raw", "vne_scaled")


@dataclass(frozen=True)
class ConvergenceCurve:
    n_vertices: int
    config: KernelConfig
    schedule: str
    seed: int | None
    edge_counts: np.ndarray
    vne_raw: np.ndarray

    @property
    def vne_scaled(self) -> np.ndarray:
        return self.vne_raw / np.log(self.n_vertices)

    @property
    def max_edges(self) -> int:
        return self.n_vertices * (self.n_vertices - 1) // 2

    @property
    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.edge_counts.tolist(), self.vne_scaled.tolist()))

    def collapses(self, threshold: float = 0.1, density: float = 0.5) -> bool:
        """True when the scaled entropy drops below ``threshold`` while at most
        ``density`` of all possible edges are present."""
        early = self.edge_counts <= density * self.max_edges
        return bool(np.any(self.vne_scaled[early] < threshold))

    def rows(self) -> Iterable[tuple]:
        name, value = _param(self.config)
        for e, raw, sc in zip(self.edge_counts, self.vne_raw, self.vne_scaled):
            yield (self.n_vertices, self.schedule, name, value, int(e), repr(float(raw)), repr(float(sc)))


def _param(cfg: KernelConfig) -> tuple[str, float]:
    if cfg.family == "heat":
        return "t", cfg.t
    if cfg.family == "matern":
        return "kappa", cfg.kappa
    raise ValidationError(f"convergence curves need a heat or Matérn kernel, not {cfg.family!r}")


def edge_order(n: int, schedule: str = "sequential", seed: int | None = 0) -> list[tuple[int, int]]:
    """Order in which edges are added: node by node, or a seeded shuffle."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if schedule == "sequential":
        return edges
    if schedule == "random":
        perm = np.random.default_rng(seed).permutation(len(edges))
        return [edges[k] for k in perm]
    raise ValidationError(f"unknown schedule {schedule!r}")


def entropy_convergence_curve(
    n_vertices: int,
    cfg: KernelConfig | None = None,
    schedule: str = "sequential",
    seed: int | None = 0,
) -> ConvergenceCurve:
    if n_vertices < 2:
        raise ValidationError("need at least two vertices")
    cfg = cfg or KernelConfig.heat()
    _param(cfg)
    W = np.zeros((n_vertices, n_vertices))
    vals = [von_neumann_entropy(build_kernel(SemanticGraph(W), cfg).matrix)]
    for i, j in edge_order(n_vertices, schedule, seed):
        W[i, j] = W[j, i] = 1.0
        vals.append(von_neumann_entropy(build_kernel(SemanticGraph(W), cfg).matrix))
    return ConvergenceCurve(
        n_vertices, cfg, schedule, seed, np.arange(len(vals)), np.asarray(vals)
    )


def select_lengthscale(
    curves: Sequence[ConvergenceCurve],
    threshold: float = 0.1,
    density: float = 0.5,
) -> float:
    """Pick a lengthscale from convergence curves.

    Returns the (lower) median of the lengthscales whose curves do not
    collapse, or the smallest candidate if all of them collapse.
    """
    if len(curves) < 1:
        raise NoCandidates("no convergence curves given")
    if len({c.n_vertices for c in curves}) != 1:
        raise ValidationError("curves must share the same vertex count")
    params = [c.config.lengthscale for c in curves]
    alive = sorted(p for p, c in zip(params, curves) if not c.collapses(threshold, density))
    if not alive:
        return min(params)
    return statistics.median_low(alive)


def grid_search_validation(
    candidate_scores: Mapping[KernelConfig, Sequence[float]],
    correct: Sequence[bool],
) -> KernelConfig:
    """Configuration with the highest validation AUROC; ties go to the
    smaller lengthscale."""
    if not candidate_scores:
        raise NoCandidates("no candidate configurations")
    if len(correct) == 0:
        raise EmptyValidation("no validation examples")
    ranked = []
    for k, (cfg, scores) in enumerate(candidate_scores.items()):
        if len(scores) != len(correct):
            raise ValidationError("scores and labels differ in length")
        ranked.append((-auroc(scores, correct), cfg.lengthscale, k, cfg))
    return min(ranked, key=lambda r: r[:3])[3]


def write_curves_csv(path, curves: Iterable[ConvergenceCurve]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in curves:
            w.writerows(c.rows())
