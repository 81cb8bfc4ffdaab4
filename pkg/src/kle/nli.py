"""Directional natural language inference (NLI) providers.

A provider turns an ordered ``(premise, hypothesis)`` pair into an
:class:`NliJudgment`. Judgments are never symmetrized here; graph
construction decides how to combine both directions.

Three backends are available:

* :class:`MockNli` - deterministic rule table, used in tests and demos.
* :class:`FileNli` - read-only JSONL cache of precomputed judgments.
* :class:`HttpNli` - client for an external inference service.

:class:`CachedNli` layers a file cache over any backend so that only unseen
pairs reach the backend, and :class:`MemoNli` memoizes within one process.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .errors import CacheMiss, ProviderError, ProviderUnavailable, ValidationError

log = logging.getLogger(__name__)

LABELS = ("entailment", "neutral", "contradiction")
SUM_TOL = 1e-6
HTTP_SUM_TOL = 1e-3


@dataclass(frozen=True)
class NliJudgment:
    p_entail: float
    p_neutral: float
    p_contra: float

    def __post_init__(self):
        p = self.probs
        if any(x < 0 or x != x for x in p):
            raise ValidationError(f"negative or NaN probability in {p}")
        if abs(sum(p) - 1.0) > SUM_TOL:
            raise ValidationError(f"probabilities {p} do not sum to 1")

    @property
    def probs(self) -> tuple[float, float, float]:
        return (self.p_entail, self.p_neutral, self.p_contra)

    @property
    def hard_label(self) -> str:
        # max() keeps the first maximum, so ties resolve entailment > neutral > contradiction
        p = self.probs
        return LABELS[max(range(3), key=lambda i: p[i])]

    @property
    def one_hot(self) -> tuple[float, float, float]:
        k = LABELS.index(self.hard_label)
        return tuple(1.0 if i == k else 0.0 for i in range(3))

    @classmethod
    def from_label(cls, label: str) -> "NliJudgment":
        k = LABELS.index(label)
        return cls(*(1.0 if i == k else 0.0 for i in range(3)))


ENTAIL = NliJudgment.from_label("entailment")
NEUTRAL = NliJudgment.from_label("neutral")
CONTRA = NliJudgment.from_label("contradiction")


def canonical(text: str) -> str:
    """Canonical form used for digests and lookups: surrounding whitespace trimmed."""
    return text.strip()


def digest(text: str) -> str:
    return hashlib.sha256(canonical(text).encode("utf-8")).hexdigest()


def _check_pair(premise: str, hypothesis: str) -> None:
    if not canonical(premise) or not canonical(hypothesis):
        raise ValidationError("NLI texts must be non-empty after trimming")


class NliProvider(Protocol):
    name: str
    model: str

    def judge(self, premise: str, hypothesis: str) -> NliJudgment: ...

    def judge_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliJudgment]: ...


class BaseNli:
    """Default ``judge_batch`` in terms of ``judge``."""

    name = "base"
    model = ""

    def judge(self, premise: str, hypothesis: str) -> NliJudgment:
        raise NotImplementedError

    def judge_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliJudgment]:
        if not pairs:
            raise ValidationError("judge_batch needs at least one pair")
        out = []
        for i, (a, b) in enumerate(pairs):
            try:
                out.append(self.judge(a, b))
            except ProviderError as exc:
                exc.index = i
                raise
        return out

    @property
    def identity(self) -> dict:
        return {"provider": self.name, "model": self.model}


_QUESTION_PREFIX = re.compile(r"^Question: .*? Answer: ", re.DOTALL)


class MockNli(BaseNli):
    """Deterministic oracle driven by an explicit rule table.

    Lookup order for an ordered pair: identical texts entail; the ``rules``
    table; the ``rule`` callable (returning a judgment or ``None``); then
    ``default`` (neutral). Rules are keyed on bare answer texts: a leading
    ``"Question: ... Answer: "`` context prefix is stripped before lookup.

    ``calls`` counts every pair judged, which tests use to audit call volume.
    """

    name = "mock"
    model = "rule-table"

    def __init__(
        self,
        rules: Mapping[tuple[str, str], NliJudgment | str] | None = None,
        rule: Callable[[str, str], NliJudgment | str | None] | None = None,
        default: NliJudgment | str = NEUTRAL,
    ):
        self.rules = {
            (canonical(a), canonical(b)): _as_judgment(v) for (a, b), v in (rules or {}).items()
        }
        self.rule = rule
        self.default = _as_judgment(default)
        self.calls = 0
        self._lock = threading.Lock()

    @staticmethod
    def strip(text: str) -> str:
        return canonical(_QUESTION_PREFIX.sub("", canonical(text), count=1))

    def judge(self, premise: str, hypothesis: str) -> NliJudgment:
        _check_pair(premise, hypothesis)
        with self._lock:
            self.calls += 1
        a, b = self.strip(premise), self.strip(hypothesis)
        if a == b:
            return ENTAIL
        if (a, b) in self.rules:
            return self.rules[(a, b)]
        if self.rule is not None:
            got = self.rule(a, b)
            if got is not None:
                return _as_judgment(got)
        return self.default

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "MockNli":
        """Load rules from JSONL lines ``{"premise", "hypothesis", "p"|"label"}``."""
        rules = {}
        for rec in _read_jsonl(path):
            val = rec.get("label") or NliJudgment(*rec["p"])
            rules[(rec["premise"], rec["hypothesis"])] = val
        return cls(rules)


def _as_judgment(v) -> NliJudgment:
    if isinstance(v, NliJudgment):
        return v
    if isinstance(v, str):
        return NliJudgment.from_label(v)
    return NliJudgment(*v)


def _read_jsonl(path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


class FileNli(BaseNli):
    """Read-only provider over a JSONL cache file.

    Each record is ``{"premise_sha", "hypothesis_sha", "premise", "hypothesis",
    "p": [e, n, c]}``. Missing pairs raise :class:`CacheMiss`.
    """

    name = "file"

    def __init__(self, records: Mapping[tuple[str, str], NliJudgment] | None = None, model: str = ""):
        self.table: dict[tuple[str, str], NliJudgment] = dict(records or {})
        self.model = model

    @classmethod
    def load(cls, path: str | Path, model: str = "") -> "FileNli":
        table = {}
        path = Path(path)
        if path.exists():
            for rec in _read_jsonl(path):
                table[(rec["premise_sha"], rec["hypothesis_sha"])] = NliJudgment(*rec["p"])
        return cls(table, model=model)

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return (digest(pair[0]), digest(pair[1])) in self.table

    def __len__(self) -> int:
        return len(self.table)

    def judge(self, premise: str, hypothesis: str) -> NliJudgment:
        _check_pair(premise, hypothesis)
        try:
            return self.table[(digest(premise), digest(hypothesis))]
        except KeyError:
            raise CacheMiss(f"no cached judgment for pair ({premise[:40]!r}, {hypothesis[:40]!r})") from None


def cache_record(premise: str, hypothesis: str, j: NliJudgment) -> dict:
    return {
        "premise_sha": digest(premise),
        "hypothesis_sha": digest(hypothesis),
        "premise": canonical(premise),
        "hypothesis": canonical(hypothesis),
        "p": list(j.probs),
    }


def write_cache(path: str | Path, items: Iterable[tuple[str, str, NliJudgment]], append: bool = False) -> int:
    n = 0
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for premise, hypothesis, j in items:
            fh.write(json.dumps(cache_record(premise, hypothesis, j), sort_keys=True) + "\n")
            n += 1
    return n


class HttpNli(BaseNli):
    """Client for an NLI inference service.

    ``POST {endpoint}/nli`` with ``{"pairs": [{"premise", "hypothesis"}, ...]}``;
    the service answers ``{"judgments": [{"entail", "neutral", "contra"}, ...]}``.
    Probability triples within 1e-3 of summing to one are renormalized, others
    are rejected. Failed requests are retried with exponential backoff.
    """

    name = "http"

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        model: str = "",
        attempts: int = 3,
        backoff: float = 0.25,
        batch_size: int = 64,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.model = model
        self.attempts = attempts
        self.backoff = backoff
        self.batch_size = batch_size

    def judge(self, premise: str, hypothesis: str) -> NliJudgment:
        return self.judge_batch([(premise, hypothesis)])[0]

    def judge_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliJudgment]:
        if not pairs:
            raise ValidationError("judge_batch needs at least one pair")
        for a, b in pairs:
            _check_pair(a, b)
        out: list[NliJudgment] = []
        for start in range(0, len(pairs), self.batch_size):
            chunk = pairs[start : start + self.batch_size]
            try:
                out.extend(self._post(chunk))
            except ProviderError as exc:
                exc.index = start + (exc.index or 0)
                raise
        return out

    def _post(self, pairs: Sequence[tuple[str, str]]) -> list[NliJudgment]:
        body = json.dumps(
            {"pairs": [{"premise": canonical(a), "hypothesis": canonical(b)} for a, b in pairs]}
        ).encode("utf-8")
        last: Exception | None = None
        for attempt in range(self.attempts):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            req = urllib.request.Request(
                self.endpoint + "/nli",
                data=body,
                headers={"Content-Type": "application/json"},
                method="POST",
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
            except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
                last = exc
                log.warning("NLI request failed (attempt %d/%d): %s", attempt + 1, self.attempts, exc)
                continue
            return parse_response(payload, len(pairs))
        raise ProviderUnavailable(f"{self.endpoint}/nli failed after {self.attempts} attempts: {last}")


def parse_response(payload, expected: int) -> list[NliJudgment]:
    """Validate an inference-service response body."""
    try:
        items = payload["judgments"]
    except (TypeError, KeyError):
        raise ProviderError("response lacks a 'judgments' list") from None
    if not isinstance(items, list) or len(items) != expected:
        raise ProviderError(f"expected {expected} judgments, got {len(items) if isinstance(items, list) else items!r}")
    out = []
    for i, item in enumerate(items):
        try:
            p = [float(item["entail"]), float(item["neutral"]), float(item["contra"])]
        except (TypeError, KeyError, ValueError):
            err = ProviderError(f"malformed judgment {item!r}")
            err.index = i
            raise err from None
        s = sum(p)
        if any(x < 0 for x in p) or abs(s - 1.0) > HTTP_SUM_TOL:
            err = ProviderError(f"judgment probabilities {p} do not sum to 1 within {HTTP_SUM_TOL}")
            err.index = i
            raise err
        out.append(NliJudgment(*(x / s for x in p)))
    return out


class MemoNli(BaseNli):
    """In-memory memoization so several methods can share one NLI pass."""

    def __init__(self, inner: NliProvider):
        self.inner = inner
        self.name = inner.name
        self.model = inner.model
        self._memo: dict[tuple[str, str], NliJudgment] = {}
        self._lock = threading.Lock()

    def judge(self, premise: str, hypothesis: str) -> NliJudgment:
        return self.judge_batch([(premise, hypothesis)])[0]

    def judge_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliJudgment]:
        if not pairs:
            raise ValidationError("judge_batch needs at least one pair")
        keys = [(canonical(a), canonical(b)) for a, b in pairs]
        with self._lock:
            missing = list(dict.fromkeys(k for k in keys if k not in self._memo))
        if missing:
            try:
                got = self.inner.judge_batch(missing)
            except ProviderError as exc:
                if exc.index is not None:
                    exc.index = keys.index(missing[exc.index])
                raise
            with self._lock:
                self._memo.update(zip(missing, got))
        with self._lock:
            return [self._memo[k] for k in keys]


class CachedNli(BaseNli):
    """File cache in front of a backend; unseen pairs go to the backend.

    New judgments are held in memory until :meth:`flush` appends them to the
    cache file, keeping cache writes a single-writer phase.
    """

    def __init__(self, backend: NliProvider, path: str | Path):
        self.backend = backend
        self.path = Path(path)
        self.cache = FileNli.load(self.path, model=backend.model)
        self.name = backend.name
        self.model = backend.model
        self._new: dict[tuple[str, str], tuple[str, str, NliJudgment]] = {}
        self._lock = threading.Lock()

    def judge(self, premise: str, hypothesis: str) -> NliJudgment:
        return self.judge_batch([(premise, hypothesis)])[0]

    def judge_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliJudgment]:
        if not pairs:
            raise ValidationError("judge_batch needs at least one pair")
        keys = [(digest(a), digest(b)) for a, b in pairs]
        with self._lock:
            todo = {}
            for k, pair in zip(keys, pairs):
                if k not in self.cache.table and k not in todo:
                    todo[k] = pair
        if todo:
            try:
                got = self.backend.judge_batch(list(todo.values()))
            except ProviderError as exc:
                if exc.index is not None:
                    exc.index = keys.index(list(todo)[exc.index])
                raise
            with self._lock:
                for k, (a, b), j in zip(todo, todo.values(), got):
                    self.cache.table[k] = j
                    self._new[k] = (a, b, j)
        with self._lock:
            return [self.cache.table[k] for k in keys]

    def flush(self) -> int:
        """Append judgments obtained since the last flush; returns how many."""
        with self._lock:
            items = [self._new[k] for k in sorted(self._new)]
            self._new.clear()
        if not items:
            return 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        return write_cache(self.path, items, append=True)
