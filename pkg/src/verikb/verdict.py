"""Ternary veracity prediction from a claim and its selected evidence.

The native classifier is a deliberately simple heuristic (threshold on
evidence confidence + negation asymmetry) so the full pipeline runs and
is testable without any model; it makes no accuracy claims. A remote
client speaks the /classify_verdict wire protocol for real models.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

from .corpus import Claim, Label, LABELS
from .evidence import EvidenceSet, ProtocolError, lexical_score
from .retrieval import tokenize

EVIDENCE_SEPARATOR = " </s> "
DEFAULT_TAU = 0.5
NEGATION_TERMS = frozenset({"not", "no", "never", "none", "cannot", "n't"})
PROB_TOLERANCE = 1e-6

NEI_PROBS = (0.0, 0.0, 1.0)


class ClassifierUnavailable(Exception):
    """Remote classifier unreachable after retries; recorded, not fatal."""


@dataclass(frozen=True)
class Verdict:
    label: Label
    probs: tuple[float, float, float]  # (Supported, Refuted, NotEnoughInfo)


def argmax_label(probs: Sequence[float]) -> Label:
    """Highest-probability label; exact ties resolve S > R > N."""
    best = 0
    for i in (1, 2):
        if probs[i] > probs[best]:
            best = i
    return LABELS[best]


def make_verdict(probs: Sequence[float]) -> Verdict:
    probs = tuple(float(p) for p in probs)
    if len(probs) != 3:
        raise ValueError(f"expected 3 probabilities, got {len(probs)}")
    if any(p < 0.0 or p > 1.0 for p in probs):
        raise ValueError(f"probabilities out of [0,1]: {probs}")
    if abs(sum(probs) - 1.0) > PROB_TOLERANCE:
        raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
    return Verdict(label=argmax_label(probs), probs=probs)


NEI_VERDICT = Verdict(label=Label.NOT_ENOUGH_INFO, probs=NEI_PROBS)


def build_input(claim: Claim, evidence: EvidenceSet, separator: str = EVIDENCE_SEPARATOR) -> str:
    """Claim text followed by the evidence sentences, in selection order."""
    parts = [claim.text] + [s.text for s in evidence.sentences]
    return separator.join(parts)


class VeracityClassifier(Protocol):
    def classify_batch(self, items: Sequence[tuple[Claim, EvidenceSet]]) -> list[Verdict]: ...


def _has_negation(text: str) -> bool:
    # "n't" never survives tokenization, so it is matched on the raw text
    tokens = set(tokenize(text))
    return bool(tokens & NEGATION_TERMS) or "n't" in text.lower()


def heuristic_classify(
    claim_text: str, evidence: EvidenceSet, tau: float = DEFAULT_TAU
) -> Verdict:
    """Native classifier rule.

    Evidence confidence below tau (including the no-evidence case) means
    NotEnoughInfo. Otherwise the top sentence decides: a negation marker
    appearing on exactly one side flips the call to Refuted.
    """
    if evidence.max_score < tau or not evidence.sentences:
        return NEI_VERDICT
    top = evidence.sentences[0].text
    if _has_negation(claim_text) != _has_negation(top):
        return Verdict(label=Label.REFUTED, probs=(0.1, 0.9, 0.0))
    return Verdict(label=Label.SUPPORTED, probs=(0.9, 0.1, 0.0))


class NativeClassifier:
    """Heuristic classifier; deterministic, pure, thread-safe."""

    def __init__(self, tau: float = DEFAULT_TAU):
        self.tau = tau

    def classify_batch(self, items: Sequence[tuple[Claim, EvidenceSet]]) -> list[Verdict]:
        return [heuristic_classify(claim.text, ev, self.tau) for claim, ev in items]


class RemoteClassifier:
    """Client for POST /classify_verdict.

    Request  {"items": [{"claim": c, "evidence": [s, ...]}, ...]}
    Response {"verdicts": [{"label": L, "probs": [ps, pr, pn]}, ...]}

    Probabilities are validated on receipt; the label is re-derived from
    the probabilities with the local tie-break so the Verdict invariant
    holds regardless of server-side conventions.
    """

    def __init__(
        self,
        endpoint: str,
        max_retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 30.0,
        batch_limit: int = 64,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.batch_limit = batch_limit
        self._in_flight = threading.BoundedSemaphore(max_in_flight)

    def classify_batch(self, items: Sequence[tuple[Claim, EvidenceSet]]) -> list[Verdict]:
        if not items:
            return []
        verdicts: list[Verdict] = []
        for start in range(0, len(items), self.batch_limit):
            verdicts.extend(self._classify_chunk(items[start : start + self.batch_limit]))
        return verdicts

    def _classify_chunk(self, chunk: Sequence[tuple[Claim, EvidenceSet]]) -> list[Verdict]:
        import requests

        body = {
            "items": [
                {"claim": claim.text, "evidence": [s.text for s in ev.sentences]}
                for claim, ev in chunk
            ]
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                with self._in_flight:
                    resp = requests.post(
                        f"{self.endpoint}/classify_verdict", json=body, timeout=self.timeout
                    )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code != 200:
                last_error = RuntimeError(f"HTTP {resp.status_code}")
                continue
            return _parse_verdicts(resp, len(chunk))
        raise ClassifierUnavailable(
            f"classifier at {self.endpoint} failed after {self.max_retries + 1} attempts: {last_error}"
        )


_LABEL_STRINGS = {label.value for label in LABELS}


def _parse_verdicts(resp, expected: int) -> list[Verdict]:
    try:
        payload = resp.json()
    except ValueError:
        raise ProtocolError("response body is not JSON")
    raw = payload.get("verdicts") if isinstance(payload, dict) else None
    if not isinstance(raw, list) or len(raw) != expected:
        raise ProtocolError(
            f"expected {expected} verdicts, got "
            f"{len(raw) if isinstance(raw, list) else type(raw).__name__}"
        )
    verdicts = []
    for item in raw:
        if not isinstance(item, dict) or item.get("label") not in _LABEL_STRINGS:
            raise ProtocolError(f"malformed verdict item {item!r}")
        probs = item.get("probs")
        if not isinstance(probs, list) or len(probs) != 3:
            raise ProtocolError(f"malformed probs {probs!r}")
        try:
            verdicts.append(make_verdict(probs))
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"invalid probs {probs!r}: {exc}")
    return verdicts


def classify(
    classifier: VeracityClassifier, claim: Claim, evidence: EvidenceSet
) -> Verdict:
    """Classify one claim given its evidence set."""
    return classifier.classify_batch([(claim, evidence)])[0]
