"""Knowledge-base strategies: single KB, union, no KB, and best-evidence
selection at task or claim level.

Every strategy produces one ClaimOutcome per claim. Stage failures
(retriever/scorer/classifier) are captured in the outcome — runs never
crash on a flaky claim — and force the conservative NotEnoughInfo verdict.
A union run degrades to the remaining KBs when one constituent fails;
that is recorded separately as a partial failure so the total-failure
invariant (failure set => NEI verdict) stays exact.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

from .corpus import Claim, ClaimTask
from .evidence import EvidenceScorer, EvidenceSet, ScorerUnavailable, select_evidence
from .retrieval import EMPTY_RESULT, RetrievalResult, Retriever, RetrieverUnavailable, retrieve_top_k
from .verdict import ClassifierUnavailable, NEI_VERDICT, VeracityClassifier, Verdict, classify

FAIL_RETRIEVER = "retriever_unavailable"
FAIL_SCORER = "scorer_unavailable"
FAIL_CLASSIFIER = "classifier_unavailable"


@dataclass(frozen=True)
class SingleKb:
    kb: str

    def label(self) -> str:
        return f"single:{self.kb}"


@dataclass(frozen=True)
class UnionKb:
    kbs: tuple[str, ...]

    def label(self) -> str:
        return "union:" + "+".join(self.kbs)


@dataclass(frozen=True)
class NoKb:
    def label(self) -> str:
        return "none"


@dataclass(frozen=True)
class BestEvidenceTask:
    kbs: tuple[str, ...]

    def label(self) -> str:
        return "best_task:" + "+".join(self.kbs)


@dataclass(frozen=True)
class BestEvidenceClaim:
    kbs: tuple[str, ...]

    def label(self) -> str:
        return "best_claim:" + "+".join(self.kbs)


KbPolicy = Union[SingleKb, UnionKb, NoKb, BestEvidenceTask, BestEvidenceClaim]


def policy_kb_names(policy: KbPolicy) -> tuple[str, ...]:
    if isinstance(policy, SingleKb):
        return (policy.kb,)
    if isinstance(policy, NoKb):
        return ()
    return policy.kbs


def validate_policy(policy: KbPolicy, registry: "KbRegistry") -> list[str]:
    """Return every problem with the policy (empty list = valid)."""
    problems = []
    names = policy_kb_names(policy)
    if not isinstance(policy, NoKb) and not names:
        problems.append(f"policy {policy.label()!r}: KB list is empty")
    if len(set(names)) != len(names):
        problems.append(f"policy {policy.label()!r}: duplicate KB names")
    for name in names:
        if name not in registry:
            problems.append(f"policy {policy.label()!r}: unknown KB {name!r}")
    return problems


class KbRegistry:
    """Ordered name -> retriever mapping; insertion order (= config file
    order) is the tie-break order for best-evidence selection."""

    def __init__(self):
        self._retrievers: dict[str, Retriever] = {}

    def add(self, retriever: Retriever) -> None:
        if retriever.name in self._retrievers:
            raise ValueError(f"KB {retriever.name!r} registered twice")
        self._retrievers[retriever.name] = retriever

    def __contains__(self, name: str) -> bool:
        return name in self._retrievers

    def __getitem__(self, name: str) -> Retriever:
        return self._retrievers[name]

    @property
    def names(self) -> list[str]:
        return list(self._retrievers)

    def order(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class ClaimOutcome:
    claim_id: str
    policy: str
    chosen_kb: str | None
    retrieval: RetrievalResult
    evidence: EvidenceSet
    verdict: Verdict
    failure: str | None = None
    partial_failures: tuple[tuple[str, str], ...] = ()


def _failed_outcome(
    claim: Claim,
    policy: KbPolicy,
    failure: str,
    chosen_kb: str | None = None,
    retrieval: RetrievalResult = EMPTY_RESULT,
    evidence: EvidenceSet | None = None,
    partial: tuple[tuple[str, str], ...] = (),
) -> ClaimOutcome:
    return ClaimOutcome(
        claim_id=claim.id,
        policy=policy.label(),
        chosen_kb=chosen_kb,
        retrieval=retrieval,
        evidence=evidence if evidence is not None else EvidenceSet.empty(claim.id),
        verdict=NEI_VERDICT,
        failure=failure,
        partial_failures=partial,
    )


def run_claim_single(
    claim: Claim,
    kb_name: str,
    registry: KbRegistry,
    scorer: EvidenceScorer,
    classifier: VeracityClassifier,
    policy: KbPolicy | None = None,
) -> ClaimOutcome:
    policy = policy if policy is not None else SingleKb(kb_name)
    try:
        result, docs = retrieve_top_k(registry[kb_name], claim)
    except RetrieverUnavailable:
        return _failed_outcome(claim, policy, FAIL_RETRIEVER, chosen_kb=kb_name)
    try:
        ev = select_evidence(claim, docs, scorer)
    except ScorerUnavailable:
        return _failed_outcome(
            claim, policy, FAIL_SCORER, chosen_kb=kb_name, retrieval=result
        )
    try:
        v = classify(classifier, claim, ev)
    except ClassifierUnavailable:
        return _failed_outcome(
            claim, policy, FAIL_CLASSIFIER, chosen_kb=kb_name, retrieval=result, evidence=ev
        )
    return ClaimOutcome(
        claim_id=claim.id,
        policy=policy.label(),
        chosen_kb=kb_name,
        retrieval=result,
        evidence=ev,
        verdict=v,
    )


def _merged_retrieval(results: Sequence[RetrievalResult]) -> RetrievalResult:
    entries = [entry for result in results for entry in result.entries]
    entries.sort(key=lambda e: (-e[1], e[0]))
    return RetrievalResult.from_entries(entries)


def run_claim_union(
    claim: Claim,
    kb_names: Sequence[str],
    registry: KbRegistry,
    scorer: EvidenceScorer,
    classifier: VeracityClassifier,
    policy: KbPolicy | None = None,
) -> ClaimOutcome:
    """Pool each KB's own top-k documents, then select across the pool."""
    policy = policy if policy is not None else UnionKb(tuple(kb_names))
    pooled_docs = []
    per_kb_results = []
    partial: list[tuple[str, str]] = []
    for name in kb_names:
        try:
            result, docs = retrieve_top_k(registry[name], claim)
        except RetrieverUnavailable:
            partial.append((name, FAIL_RETRIEVER))
            continue
        per_kb_results.append(result)
        pooled_docs.extend(docs)
    if not per_kb_results and partial:
        return _failed_outcome(claim, policy, FAIL_RETRIEVER, partial=tuple(partial))
    merged = _merged_retrieval(per_kb_results)
    try:
        ev = select_evidence(claim, pooled_docs, scorer)
    except ScorerUnavailable:
        return _failed_outcome(
            claim, policy, FAIL_SCORER, retrieval=merged, partial=tuple(partial)
        )
    try:
        v = classify(classifier, claim, ev)
    except ClassifierUnavailable:
        return _failed_outcome(
            claim, policy, FAIL_CLASSIFIER, retrieval=merged, evidence=ev,
            partial=tuple(partial),
        )
    return ClaimOutcome(
        claim_id=claim.id,
        policy=policy.label(),
        chosen_kb=None,
        retrieval=merged,
        evidence=ev,
        verdict=v,
        partial_failures=tuple(partial),
    )


def run_claim_none(
    claim: Claim, classifier: VeracityClassifier, policy: KbPolicy | None = None
) -> ClaimOutcome:
    """Classify on the claim alone; the native classifier then always
    answers NotEnoughInfo."""
    policy = policy if policy is not None else NoKb()
    ev = EvidenceSet.empty(claim.id)
    try:
        v = classify(classifier, claim, ev)
    except ClassifierUnavailable:
        return _failed_outcome(claim, policy, FAIL_CLASSIFIER)
    return ClaimOutcome(
        claim_id=claim.id,
        policy=policy.label(),
        chosen_kb=None,
        retrieval=EMPTY_RESULT,
        evidence=ev,
        verdict=v,
    )


def select_kb_task(
    task: ClaimTask,
    kb_names: Sequence[str],
    registry: KbRegistry,
    scorer: EvidenceScorer,
) -> str:
    """KB with the highest mean evidence confidence over the whole task.

    Claims whose retrieval or scoring fails (or yields no evidence)
    contribute 0 to the mean. Ties break by registry order.
    """
    best_name: str | None = None
    best_mean = -1.0
    for name in sorted(kb_names, key=registry.order):
        total = 0.0
        for claim in task.claims:
            try:
                _, docs = retrieve_top_k(registry[name], claim)
                total += select_evidence(claim, docs, scorer).max_score
            except (RetrieverUnavailable, ScorerUnavailable):
                pass
        mean = total / len(task.claims)
        if mean > best_mean:
            best_mean = mean
            best_name = name
    assert best_name is not None
    return best_name


def select_kb_claim(
    claim: Claim,
    kb_names: Sequence[str],
    registry: KbRegistry,
    scorer: EvidenceScorer,
) -> tuple[str | None, EvidenceSet, RetrievalResult, tuple[tuple[str, str], ...]]:
    """Evidence from every KB; the set with the highest max score wins.

    Returns (kb name, evidence, that KB's retrieval, partial failures).
    The winning evidence set is reused as-is, never re-fetched. A KB that
    fails is skipped; if all fail the name is None (no-KB behavior).
    """
    best: tuple[str, EvidenceSet, RetrievalResult] | None = None
    partial: list[tuple[str, str]] = []
    for name in sorted(kb_names, key=registry.order):
        try:
            result, docs = retrieve_top_k(registry[name], claim)
            ev = select_evidence(claim, docs, scorer)
        except RetrieverUnavailable:
            partial.append((name, FAIL_RETRIEVER))
            continue
        except ScorerUnavailable:
            partial.append((name, FAIL_SCORER))
            continue
        if best is None or ev.max_score > best[1].max_score:
            best = (name, ev, result)
    if best is None:
        return None, EvidenceSet.empty(claim.id), EMPTY_RESULT, tuple(partial)
    return best[0], best[1], best[2], tuple(partial)


def run_claim_best_evidence(
    claim: Claim,
    kb_names: Sequence[str],
    registry: KbRegistry,
    scorer: EvidenceScorer,
    classifier: VeracityClassifier,
    policy: KbPolicy | None = None,
) -> ClaimOutcome:
    policy = policy if policy is not None else BestEvidenceClaim(tuple(kb_names))
    name, ev, result, partial = select_kb_claim(claim, kb_names, registry, scorer)
    try:
        v = classify(classifier, claim, ev)
    except ClassifierUnavailable:
        return _failed_outcome(
            claim, policy, FAIL_CLASSIFIER, chosen_kb=name, retrieval=result,
            evidence=ev, partial=partial,
        )
    return ClaimOutcome(
        claim_id=claim.id,
        policy=policy.label(),
        chosen_kb=name,
        retrieval=result,
        evidence=ev,
        verdict=v,
        partial_failures=partial,
    )


def run_task_policy(
    task: ClaimTask,
    policy: KbPolicy,
    registry: KbRegistry,
    scorer: EvidenceScorer,
    classifier: VeracityClassifier,
    workers: int = 1,
) -> list[ClaimOutcome]:
    """One outcome per claim, in task order regardless of worker count."""
    if isinstance(policy, SingleKb):
        run_one = lambda c: run_claim_single(c, policy.kb, registry, scorer, classifier, policy)
    elif isinstance(policy, UnionKb):
        run_one = lambda c: run_claim_union(c, policy.kbs, registry, scorer, classifier, policy)
    elif isinstance(policy, NoKb):
        run_one = lambda c: run_claim_none(c, classifier, policy)
    elif isinstance(policy, BestEvidenceTask):
        chosen = select_kb_task(task, policy.kbs, registry, scorer)
        run_one = lambda c: run_claim_single(c, chosen, registry, scorer, classifier, policy)
    elif isinstance(policy, BestEvidenceClaim):
        run_one = lambda c: run_claim_best_evidence(
            c, policy.kbs, registry, scorer, classifier, policy
        )
    else:
        raise TypeError(f"unknown policy {policy!r}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_one, task.claims))
    return [run_one(claim) for claim in task.claims]
