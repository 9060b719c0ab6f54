"""Evidence sentence scoring and top-n selection.

A scorer maps (claim, sentence) pairs to confidence scores in the open
interval (0,1). Two implementations ship: a lexical-overlap scorer that
keeps the whole pipeline dependency-free, and an HTTP client for any
service speaking the /score_evidence wire protocol.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

from .corpus import Claim, Document
from .retrieval import tokenize

EVIDENCE_TOP_N = 5
SCORE_CLAMP = 1e-6
REMOTE_BATCH_LIMIT = 64


class ScorerUnavailable(Exception):
    """Remote scorer unreachable after retries; recorded, not fatal."""


class ProtocolError(Exception):
    """Remote scorer answered with a malformed response."""


@dataclass(frozen=True)
class EvidenceSentence:
    doc_id: str
    sentence_index: int
    text: str
    score: float


@dataclass(frozen=True)
class EvidenceSet:
    claim_id: str
    sentences: tuple[EvidenceSentence, ...]
    max_score: float

    @staticmethod
    def empty(claim_id: str) -> "EvidenceSet":
        return EvidenceSet(claim_id=claim_id, sentences=(), max_score=0.0)


class EvidenceScorer(Protocol):
    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


def lexical_score(claim_text: str, sentence_text: str) -> float:
    """Jaccard token overlap mapped affinely into (0,1).

    0.02 + 0.96 * J keeps even perfect/disjoint pairs strictly inside the
    open interval. Symmetric in its arguments.
    """
    claim_tokens = set(tokenize(claim_text))
    sentence_tokens = set(tokenize(sentence_text))
    union = claim_tokens | sentence_tokens
    if not union:
        return 0.02
    jaccard = len(claim_tokens & sentence_tokens) / len(union)
    return 0.02 + 0.96 * jaccard


class LexicalScorer:
    """Native scorer; pure and thread-safe."""

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [lexical_score(claim, sentence) for claim, sentence in pairs]


class RemoteScorer:
    """Client for POST /score_evidence.

    Request  {"pairs": [{"claim": c, "sentence": s}, ...]}
    Response {"scores": [x, ...]} with len(scores) == len(pairs).

    Batches above 64 pairs are chunked; received scores are clamped into
    [1e-6, 1 - 1e-6]. In-flight requests are bounded across threads
    (default 4). Transport errors retry with exponential backoff and end
    in ScorerUnavailable; malformed responses raise ProtocolError.
    """

    def __init__(
        self,
        endpoint: str,
        max_retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 30.0,
        batch_limit: int = REMOTE_BATCH_LIMIT,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.batch_limit = batch_limit
        self._in_flight = threading.BoundedSemaphore(max_in_flight)

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        scores: list[float] = []
        for start in range(0, len(pairs), self.batch_limit):
            scores.extend(self._score_chunk(pairs[start : start + self.batch_limit]))
        return scores

    def _score_chunk(self, chunk: Sequence[tuple[str, str]]) -> list[float]:
        import requests

        body = {"pairs": [{"claim": c, "sentence": s} for c, s in chunk]}
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                with self._in_flight:
                    resp = requests.post(
                        f"{self.endpoint}/score_evidence", json=body, timeout=self.timeout
                    )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code != 200:
                last_error = RuntimeError(f"HTTP {resp.status_code}")
                continue
            return _parse_scores(resp, len(chunk))
        raise ScorerUnavailable(
            f"scorer at {self.endpoint} failed after {self.max_retries + 1} attempts: {last_error}"
        )


def _parse_scores(resp, expected: int) -> list[float]:
    try:
        payload = resp.json()
    except ValueError:
        raise ProtocolError("response body is not JSON")
    scores = payload.get("scores") if isinstance(payload, dict) else None
    if not isinstance(scores, list) or len(scores) != expected:
        raise ProtocolError(
            f"expected {expected} scores, got "
            f"{len(scores) if isinstance(scores, list) else type(scores).__name__}"
        )
    cleaned = []
    for value in scores:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProtocolError(f"non-numeric score {value!r}")
        cleaned.append(min(max(float(value), SCORE_CLAMP), 1.0 - SCORE_CLAMP))
    return cleaned


def select_evidence(
    claim: Claim,
    docs: Sequence[Document],
    scorer: EvidenceScorer,
    n: int = EVIDENCE_TOP_N,
) -> EvidenceSet:
    """Score every sentence of every retrieved document; keep the top n.

    All sentences are scored in one score_batch call. Ordering is by score
    descending, ties by (doc id, sentence index) ascending. The set's
    max_score is the global maximum over all scored sentences, which the
    head element realizes by construction.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    candidates: list[tuple[str, int, str]] = []
    for doc in docs:
        for idx, sentence in enumerate(doc.sentences):
            candidates.append((doc.id, idx, sentence))
    if not candidates:
        return EvidenceSet.empty(claim.id)

    scores = scorer.score_batch([(claim.text, text) for _, _, text in candidates])
    if len(scores) != len(candidates):
        raise ProtocolError(
            f"scorer returned {len(scores)} scores for {len(candidates)} sentences"
        )
    scored = [
        EvidenceSentence(doc_id=doc_id, sentence_index=idx, text=text, score=score)
        for (doc_id, idx, text), score in zip(candidates, scores)
    ]
    scored.sort(key=lambda s: (-s.score, s.doc_id, s.sentence_index))
    top = tuple(scored[:n])
    return EvidenceSet(claim_id=claim.id, sentences=top, max_score=top[0].score)
