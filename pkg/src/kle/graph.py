"""Semantic graphs over sampled answers or over semantic clusters.

Edge weights come from NLI judgments in both directions,
``W_ij = w · NLI'(S_i, S_j) + w · NLI'(S_j, S_i)`` with ``w = (1, 0.5, 0)``
over (entailment, neutral, contradiction). ``NLI'`` is the one-hot hard
label (``scheme="one-hot"``) or the raw probability vector (``"soft"``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ValidationError
from .nli import NliJudgment, NliProvider

DEFAULT_WEIGHTS = (1.0, 0.5, 0.0)
SCHEMES = ("one-hot", "soft")


@dataclass(frozen=True)
class AnswerSet:
    question_id: str
    question: str
    answers: tuple[str, ...]
    token_logprobs: tuple[tuple[float, ...], ...] | None = None
    correct: bool | None = None
    low_temp_answer: str | None = None
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(self.answers))
        if len(self.answers) < 1:
            raise ValidationError(f"{self.question_id}: need at least one answer")
        if self.token_logprobs is not None:
            lp = tuple(tuple(float(x) for x in seq) for seq in self.token_logprobs)
            if len(lp) != len(self.answers):
                raise ValidationError(
                    f"{self.question_id}: {len(lp)} token_logprobs for {len(self.answers)} answers"
                )
            object.__setattr__(self, "token_logprobs", lp)

    def __len__(self) -> int:
        return len(self.answers)

    @property
    def has_logprobs(self) -> bool:
        return self.token_logprobs is not None

    def nli_texts(self, include_question: bool = True) -> list[str]:
        if not include_question:
            return list(self.answers)
        return [f"Question: {self.question} Answer: {a}" for a in self.answers]

    def permuted(self, order: Sequence[int]) -> "AnswerSet":
        lp = None if self.token_logprobs is None else tuple(self.token_logprobs[i] for i in order)
        return AnswerSet(
            self.question_id,
            self.question,
            tuple(self.answers[i] for i in order),
            lp,
            self.correct,
            self.low_temp_answer,
            self.extra,
        )

    _KNOWN = ("id", "question", "answers", "token_logprobs", "correct", "low_temp_answer")

    @classmethod
    def from_record(cls, rec: dict) -> "AnswerSet":
        try:
            qid, answers = rec["id"], rec["answers"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"record missing required field {exc}") from None
        if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
            raise ValidationError(f"{qid}: 'answers' must be a list of strings")
        correct = rec.get("correct")
        if correct is not None and not isinstance(correct, bool):
            raise ValidationError(f"{qid}: 'correct' must be a boolean")
        return cls(
            question_id=str(qid),
            question=str(rec.get("question", "")),
            answers=tuple(answers),
            token_logprobs=rec.get("token_logprobs"),
            correct=correct,
            low_temp_answer=rec.get("low_temp_answer"),
            extra={k: v for k, v in rec.items() if k not in cls._KNOWN},
        )


@dataclass(frozen=True)
class Clustering:
    """Partition of answers; ``assignment[i]`` is the cluster of answer ``i``."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(c) for c in self.assignment)
        object.__setattr__(self, "assignment", a)
        if not a:
            raise ValidationError("empty clustering")
        if set(a) != set(range(max(a) + 1)):
            raise ValidationError(f"cluster indices must be contiguous from 0: {a}")

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def M(self) -> int:
        return max(self.assignment) + 1

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(np.bincount(self.assignment, minlength=self.M).tolist())

    def members(self, c: int) -> list[int]:
        return [i for i, k in enumerate(self.assignment) if k == c]

    def indicator(self) -> np.ndarray:
        """N x M 0/1 membership matrix."""
        A = np.zeros((self.n, self.M))
        A[np.arange(self.n), self.assignment] = 1.0
        return A

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Clustering":
        """Relabel arbitrary hashable labels by order of first appearance."""
        seen: dict = {}
        return cls(tuple(seen.setdefault(x, len(seen)) for x in labels))

    def summary(self) -> dict:
        return {"M": self.M, "sizes": list(self.sizes), "assignment": list(self.assignment)}


@dataclass(frozen=True, eq=False)
class SemanticGraph:
    W: np.ndarray
    node_kind: str = "answers"

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValidationError("weight matrix must be square")
        if not np.all(np.isfinite(W)) or np.any(W < 0):
            raise ValidationError("weights must be finite and nonnegative")
        if np.any(np.diag(W) != 0):
            raise ValidationError("weight matrix must have a zero diagonal")
        if not np.array_equal(W, W.T):
            raise ValidationError("weight matrix must be symmetric")
        if self.node_kind not in ("answers", "clusters"):
            raise ValidationError(f"unknown node kind {self.node_kind!r}")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def laplacian(self, normalized: bool = False) -> np.ndarray:
        return laplacian(self, normalized)


def edge_weight(
    forward: NliJudgment,
    backward: NliJudgment,
    scheme: str = "one-hot",
    weights: Sequence[float] = DEFAULT_WEIGHTS,
) -> float:
    if scheme == "one-hot":
        a, b = forward.one_hot, backward.one_hot
    elif scheme == "soft":
        a, b = forward.probs, backward.probs
    else:
        raise ValidationError(f"unknown weighting scheme {scheme!r}")
    return float(np.dot(weights, a) + np.dot(weights, b))


def pairwise_judgments(texts: Sequence[str], nli: NliProvider) -> dict[tuple[int, int], NliJudgment]:
    """Judge every ordered pair ``(i, j)``, ``i != j``, in one batch."""
    n = len(texts)
    idx = [(i, j) for i in range(n) for j in range(n) if i != j]
    if not idx:
        return {}
    got = nli.judge_batch([(texts[i], texts[j]) for i, j in idx])
    return dict(zip(idx, got))


def weight_matrix_answers(
    answers: AnswerSet,
    nli: NliProvider,
    scheme: str = "one-hot",
    include_question: bool = True,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
) -> SemanticGraph:
    """Answer-level semantic graph. Issues exactly N(N-1) directed judgments."""
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown weighting scheme {scheme!r}")
    n = len(answers)
    J = pairwise_judgments(answers.nli_texts(include_question), nli)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            W[i, j] = W[j, i] = edge_weight(J[i, j], J[j, i], scheme, weights)
    return SemanticGraph(W, "answers")


def weight_matrix_clusters(
    answers: AnswerSet,
    clustering: Clustering,
    nli: NliProvider,
    scheme: str = "one-hot",
    include_question: bool = True,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
) -> SemanticGraph:
    """Cluster-level graph: ``W_ij`` sums answer-level edge weights over members of C_i x C_j."""
    if clustering.n != len(answers):
        raise ValidationError("clustering does not match the answer set")
    Wa = weight_matrix_answers(answers, nli, scheme, include_question, weights).W
    A = clustering.indicator()
    Wc = A.T @ Wa @ A
    np.fill_diagonal(Wc, 0.0)
    return SemanticGraph((Wc + Wc.T) / 2.0, "clusters")


def bidirectional_cluster(
    answers: AnswerSet,
    nli: NliProvider,
    include_question: bool = True,
) -> Clustering:
    """Greedy clustering by bidirectional entailment.

    Answers are visited in input order and compared with the first member of
    each existing cluster, in creation order. An answer joins the first
    cluster whose representative entails it and is entailed by it (hard
    labels); otherwise it opens a new cluster.
    """
    texts = answers.nli_texts(include_question)
    reps: list[int] = []
    assignment: list[int] = []
    for i, text in enumerate(texts):
        for c, r in enumerate(reps):
            fwd, bwd = nli.judge_batch([(texts[r], text), (text, texts[r])])
            if fwd.hard_label == "entailment" and bwd.hard_label == "entailment":
                assignment.append(c)
                break
        else:
            assignment.append(len(reps))
            reps.append(i)
    return Clustering(tuple(assignment))


def laplacian(G: SemanticGraph | np.ndarray, normalized: bool = False) -> np.ndarray:
    """Graph Laplacian ``L = D - W``.

    The normalized variant is ``(D⁺)^{1/2} L (D⁺)^{1/2}`` with ``D⁺`` the
    Moore-Penrose inverse of the degree matrix, so isolated nodes give zero
    rows in both variants.
    """
    W = G.W if isinstance(G, SemanticGraph) else SemanticGraph(G).W
    d = W.sum(axis=1)
    L = np.diag(d) - W
    if normalized:
        s = np.zeros_like(d)
        nz = d > 0
        s[nz] = 1.0 / np.sqrt(d[nz])
        L = L * np.outer(s, s)
    return (L + L.T) / 2.0
