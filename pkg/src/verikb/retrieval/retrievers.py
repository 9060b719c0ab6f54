"""Document retrievers: BM25-indexed, recorded-fixture, and live web search.

Indexed retrieval ranks every document by BM25 and keeps the top k with
positive score (descending score, ties by ascending document id). Fixture
and web retrievers return hits in recorded/API order with rank-derived
scores m - rank (m = number of returned hits), since those sources expose
no native score.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from ..corpus import Claim, Document, KnowledgeBase, MalformedLineError, RetrieverKind
from . import kernel
from .index import B, K1, InvertedIndex, build_index, tokenize

DEFAULT_K_INDEXED = 5
DEFAULT_K_WEB = 10


class RetrieverUnavailable(Exception):
    """Transport-level retrieval failure after retries; recorded, not fatal."""


@dataclass(frozen=True)
class RetrievalResult:
    entries: tuple[tuple[str, float], ...]  # (doc id, score), best first
    max_score: float

    @staticmethod
    def from_entries(entries: list[tuple[str, float]]) -> "RetrievalResult":
        return RetrievalResult(
            entries=tuple(entries),
            max_score=entries[0][1] if entries else 0.0,
        )


EMPTY_RESULT = RetrievalResult(entries=(), max_score=0.0)


class Retriever(Protocol):
    name: str
    kind: RetrieverKind
    default_k: int

    def retrieve(self, claim: Claim, k: int) -> tuple[RetrievalResult, list[Document]]: ...


def retrieve_top_k(
    retriever: Retriever, claim: Claim, k: int | None = None
) -> tuple[RetrievalResult, list[Document]]:
    """Run a retriever with its kind-specific default k (5 indexed, 10 web)."""
    if k is None:
        k = retriever.default_k
    if k < 1:
        raise ValueError("k must be >= 1")
    return retriever.retrieve(claim, k)


def _rank_scored(docs: list[Document]) -> tuple[RetrievalResult, list[Document]]:
    m = len(docs)
    entries = [(doc.id, float(m - rank)) for rank, doc in enumerate(docs)]
    return RetrievalResult.from_entries(entries), docs


class IndexedRetriever:
    kind = RetrieverKind.INDEXED
    default_k = DEFAULT_K_INDEXED

    def __init__(self, kb: KnowledgeBase, index: InvertedIndex | None = None):
        self.name = kb.name
        self.kb = kb
        self.index = index if index is not None else build_index(kb)

    def retrieve(self, claim: Claim, k: int) -> tuple[RetrievalResult, list[Document]]:
        terms = tokenize(claim.text)
        scores = kernel.score_all(self.index, terms, K1, B)
        scored = [
            (self.kb.documents[ordinal].id, score, ordinal)
            for ordinal, score in enumerate(scores)
            if score > 0.0
        ]
        scored.sort(key=lambda item: (-item[1], item[0]))
        top = scored[:k]
        result = RetrievalResult.from_entries([(doc_id, score) for doc_id, score, _ in top])
        return result, [self.kb.documents[ordinal] for _, _, ordinal in top]


class FixtureRetriever:
    """Replays recorded hits from a JSON-lines file of {claim_id, hits}."""

    kind = RetrieverKind.FIXTURE
    default_k = DEFAULT_K_WEB

    def __init__(self, name: str, hits_by_claim: dict[str, list[Document]]):
        self.name = name
        self.hits_by_claim = hits_by_claim

    @classmethod
    def from_file(cls, path: str | Path, name: str) -> "FixtureRetriever":
        path = Path(path)
        hits_by_claim: dict[str, list[Document]] = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedLineError(path, line_no, f"invalid JSON ({exc.msg})")
                if "claim_id" not in obj or "hits" not in obj:
                    raise MalformedLineError(path, line_no, "expected claim_id and hits")
                docs = [
                    Document(id=h["id"], title=h.get("title"), text=h["text"])
                    for h in obj["hits"]
                ]
                hits_by_claim[obj["claim_id"]] = docs
        return cls(name=name, hits_by_claim=hits_by_claim)

    def retrieve(self, claim: Claim, k: int) -> tuple[RetrievalResult, list[Document]]:
        return _rank_scored(self.hits_by_claim.get(claim.id, [])[:k])


class WebSearchRetriever:
    """Live HTTP retriever (config-gated); GET endpoint?q=...&k=...

    The endpoint must answer {"hits": [{"id", "title"?, "text"}, ...]}.
    In-flight requests are bounded (default 2) so concurrent claim
    workers cannot stampede a rate-limited API. Transport failures are
    retried with exponential backoff and surface as RetrieverUnavailable
    so a run records the claim instead of dying.
    """

    kind = RetrieverKind.WEB_SEARCH

    def __init__(
        self,
        name: str,
        endpoint: str,
        api_key_env: str | None = None,
        hits: int = DEFAULT_K_WEB,
        max_retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 10.0,
        max_in_flight: int = 2,
    ):
        self.name = name
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.default_k = hits
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._in_flight = threading.BoundedSemaphore(max_in_flight)

    def retrieve(self, claim: Claim, k: int) -> tuple[RetrievalResult, list[Document]]:
        import requests

        headers = {}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                with self._in_flight:
                    resp = requests.get(
                        self.endpoint,
                        params={"q": claim.text, "k": k},
                        headers=headers,
                        timeout=self.timeout,
                    )
                if resp.status_code != 200:
                    last_error = RuntimeError(f"HTTP {resp.status_code}")
                    continue
                hits = resp.json()["hits"]
                docs = [
                    Document(id=h["id"], title=h.get("title"), text=h["text"])
                    for h in hits[:k]
                ]
                return _rank_scored(docs)
            except (requests.RequestException, KeyError, ValueError, TypeError) as exc:
                last_error = exc
        raise RetrieverUnavailable(
            f"web retriever {self.name!r} failed after {self.max_retries + 1} attempts: {last_error}"
        )
