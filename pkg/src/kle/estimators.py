"""Uncertainty scores for one answer set: KLE, KLE-c, SE, discrete SE and PE.

All scores are entropies in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import EmptySequence, InvalidProbs, MissingLogprobs, ValidationError
from .graph import (
    AnswerSet,
    Clustering,
    bidirectional_cluster,
    weight_matrix_answers,
    weight_matrix_clusters,
)
from .kernels import PROB_TOL, KernelConfig, build_kernel
from .linalg import shannon_entropy, von_neumann_entropy
from .nli import MemoNli, NliProvider


def sequence_loglik(token_logprobs: Sequence[float]) -> float:
    """Length-normalized log-likelihood: the mean token log-probability."""
    lp = np.asarray(token_logprobs, dtype=float)
    if lp.size == 0:
        raise EmptySequence("empty token log-probability sequence")
    if not np.all(np.isfinite(lp)) or np.any(lp > 0):
        raise ValidationError("token log-probabilities must be finite and <= 0")
    return float(lp.mean())


def cluster_probs(answers: AnswerSet, clustering: Clustering, mode: str = "likelihood") -> np.ndarray:
    """Normalized cluster probabilities.

    ``likelihood``: ``p(C) ∝ Σ_{s∈C} exp(sequence_loglik(s))``.
    ``discrete``: fraction of answers in each cluster.
    """
    if clustering.n != len(answers):
        raise ValidationError("clustering does not match the answer set")
    if mode == "discrete":
        return np.asarray(clustering.sizes, dtype=float) / clustering.n
    if mode != "likelihood":
        raise ValidationError(f"unknown cluster probability mode {mode!r}")
    if not answers.has_logprobs:
        raise MissingLogprobs(f"{answers.question_id}: likelihood mode needs token_logprobs")
    ll = np.array([sequence_loglik(s) for s in answers.token_logprobs])
    a = np.asarray(clustering.assignment)
    logp = np.array([logsumexp(ll[a == c]) for c in range(clustering.M)])
    return np.exp(logp - logsumexp(logp))


def semantic_entropy(probs) -> float:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise InvalidProbs(f"not a probability vector: {p.tolist()}")
    return shannon_entropy(p)


def predictive_entropy(answers: AnswerSet) -> float:
    """Monte Carlo predictive entropy ``-(1/N) Σ sequence_loglik(s_i)``."""
    if not answers.has_logprobs:
        raise MissingLogprobs(f"{answers.question_id}: predictive entropy needs token_logprobs")
    return -float(np.mean([sequence_loglik(s) for s in answers.token_logprobs]))


def default_prob_mode(answers: AnswerSet) -> str:
    return "likelihood" if answers.has_logprobs else "discrete"


def kle(
    answers: AnswerSet,
    nli: NliProvider,
    cfg: KernelConfig | None = None,
    scheme: str = "one-hot",
    include_question: bool = True,
    prob_mode: str | None = None,
) -> float:
    """Von Neumann entropy of a semantic kernel over the individual answers."""
    cfg = cfg or KernelConfig.heat()
    if len(answers) == 1:
        return 0.0
    G = weight_matrix_answers(answers, nli, scheme, include_question)
    clustering = probs = None
    if cfg.needs_probs:
        clustering = bidirectional_cluster(answers, nli, include_question)
        probs = cluster_probs(answers, clustering, prob_mode or default_prob_mode(answers))
    return von_neumann_entropy(build_kernel(G, cfg, clustering, probs).matrix)


def kle_c(
    answers: AnswerSet,
    nli: NliProvider,
    cfg: KernelConfig | None = None,
    scheme: str = "one-hot",
    include_question: bool = True,
    prob_mode: str | None = None,
    clustering: Clustering | None = None,
) -> float:
    """Von Neumann entropy of a semantic kernel over semantic clusters."""
    cfg = cfg or KernelConfig.heat()
    if len(answers) == 1:
        return 0.0
    clustering = clustering or bidirectional_cluster(answers, nli, include_question)
    G = weight_matrix_clusters(answers, clustering, nli, scheme, include_question)
    probs = None
    if cfg.needs_probs:
        probs = cluster_probs(answers, clustering, prob_mode or default_prob_mode(answers))
    return von_neumann_entropy(build_kernel(G, cfg, clustering, probs).matrix)


METHODS = ("KLE_heat", "KLE_full", "KLE_matern", "KLEc_heat", "SE", "DSE", "PE")

DEFAULT_CONFIGS: dict[str, KernelConfig] = {
    "KLE_heat": KernelConfig.heat(),
    "KLE_full": KernelConfig.full(),
    "KLE_matern": KernelConfig.matern(),
    "KLEc_heat": KernelConfig.heat(),
}


@dataclass
class UncertaintyScores:
    question_id: str
    scores: dict[str, float] = field(default_factory=dict)
    unavailable: dict[str, str] = field(default_factory=dict)
    clustering: Clustering | None = None
    configs: dict[str, KernelConfig] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "scores": {m: self.scores.get(m) for m in (*self.scores, *self.unavailable)},
            "unavailable": dict(self.unavailable),
            "clustering": self.clustering.summary() if self.clustering else None,
            "kernels": {m: c.to_dict() for m, c in self.configs.items()},
        }


def score_answer_set(
    answers: AnswerSet,
    nli: NliProvider,
    methods: Sequence[str] = METHODS,
    configs: Mapping[str, KernelConfig] | None = None,
    scheme: str = "one-hot",
    include_question: bool = True,
    prob_mode: str | None = None,
) -> UncertaintyScores:
    """Score ``answers`` with every requested method, sharing one NLI pass.

    Methods that cannot run (SE and PE without token log-probabilities) are
    listed in ``unavailable`` with the reason instead of raising.
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValidationError(f"unknown methods {sorted(unknown)}")
    cfgs = {**DEFAULT_CONFIGS, **(configs or {})}
    nli = MemoNli(nli)
    out = UncertaintyScores(answers.question_id, configs={m: cfgs[m] for m in methods if m in cfgs})
    clustering = bidirectional_cluster(answers, nli, include_question)
    out.clustering = clustering
    pmode = prob_mode or default_prob_mode(answers)
    single = len(answers) == 1

    for m in methods:
        try:
            if m in ("SE", "PE") and not answers.has_logprobs:
                raise MissingLogprobs("token_logprobs absent")
            if single:
                val = 0.0
            elif m == "SE":
                val = semantic_entropy(cluster_probs(answers, clustering, "likelihood"))
            elif m == "DSE":
                val = semantic_entropy(cluster_probs(answers, clustering, "discrete"))
            elif m == "PE":
                val = predictive_entropy(answers)
            elif m.startswith("KLEc_"):
                val = kle_c(answers, nli, cfgs[m], scheme, include_question, pmode, clustering)
            else:
                val = kle(answers, nli, cfgs[m], scheme, include_question, pmode)
        except MissingLogprobs as exc:
            out.unavailable[m] = str(exc)
            continue
        if not math.isfinite(val):
            raise ValidationError(f"{answers.question_id}: {m} produced {val}")
        out.scores[m] = val
    return out
