"""Run persistence: per-cell outcome JSONL files and the run manifest.

Each (task x policy) cell writes outcomes/<cell>.jsonl whose first line is
a header object carrying the config hash and cell metadata; a sibling
.done sentinel marks the cell complete so --resume can skip it. Expensive
remote-scorer cells are therefore never recomputed by accident.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .corpus import Label
from .evidence import EvidenceSentence, EvidenceSet
from .policy import ClaimOutcome
from .retrieval import RetrievalResult
from .verdict import Verdict, make_verdict

_SAFE = re.compile(r"[^A-Za-z0-9._-]+")


def cell_file_stem(task_name: str, policy_label: str) -> str:
    return f"{_SAFE.sub('-', task_name)}__{_SAFE.sub('-', policy_label)}"


def outcome_to_record(outcome: ClaimOutcome, gold: Label | None) -> dict:
    return {
        "claim_id": outcome.claim_id,
        "policy": outcome.policy,
        "chosen_kb": outcome.chosen_kb,
        "gold": gold.value if gold is not None else None,
        "retrieval": {
            "entries": [[doc_id, score] for doc_id, score in outcome.retrieval.entries],
            "max_score": outcome.retrieval.max_score,
        },
        "evidence": {
            "sentences": [
                {
                    "doc_id": s.doc_id,
                    "sentence_index": s.sentence_index,
                    "text": s.text,
                    "score": s.score,
                }
                for s in outcome.evidence.sentences
            ],
            "max_score": outcome.evidence.max_score,
        },
        "verdict": {
            "label": outcome.verdict.label.value,
            "probs": list(outcome.verdict.probs),
        },
        "failure": outcome.failure,
        "partial_failures": [list(pf) for pf in outcome.partial_failures],
    }


def outcome_from_record(record: dict) -> tuple[ClaimOutcome, Label | None]:
    retrieval = RetrievalResult(
        entries=tuple((doc_id, float(score)) for doc_id, score in record["retrieval"]["entries"]),
        max_score=float(record["retrieval"]["max_score"]),
    )
    evidence = EvidenceSet(
        claim_id=record["claim_id"],
        sentences=tuple(
            EvidenceSentence(
                doc_id=s["doc_id"],
                sentence_index=int(s["sentence_index"]),
                text=s["text"],
                score=float(s["score"]),
            )
            for s in record["evidence"]["sentences"]
        ),
        max_score=float(record["evidence"]["max_score"]),
    )
    raw_verdict = record["verdict"]
    if record["failure"] is not None:
        verdict = Verdict(
            label=Label(raw_verdict["label"]), probs=tuple(raw_verdict["probs"])
        )
    else:
        verdict = make_verdict(raw_verdict["probs"])
    outcome = ClaimOutcome(
        claim_id=record["claim_id"],
        policy=record["policy"],
        chosen_kb=record["chosen_kb"],
        retrieval=retrieval,
        evidence=evidence,
        verdict=verdict,
        failure=record["failure"],
        partial_failures=tuple(tuple(pf) for pf in record["partial_failures"]),
    )
    gold = Label(record["gold"]) if record["gold"] is not None else None
    return outcome, gold


def write_cell(
    path: Path,
    config_hash: str,
    task_name: str,
    policy_label: str,
    kb: str | None,
    outcomes: list[ClaimOutcome],
    golds: list[Label | None],
) -> None:
    header = {
        "type": "header",
        "config_hash": config_hash,
        "task": task_name,
        "policy": policy_label,
        "kb": kb,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
        for outcome, gold in zip(outcomes, golds):
            fh.write(
                json.dumps(outcome_to_record(outcome, gold), sort_keys=True, ensure_ascii=False)
                + "\n"
            )
    path.with_suffix(".done").write_text("ok\n", encoding="utf-8")


def read_cell(path: Path) -> tuple[dict, list[ClaimOutcome], list[Label | None]]:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty cell file")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ValueError(f"{path}: missing header line")
    outcomes: list[ClaimOutcome] = []
    golds: list[Label | None] = []
    for line in lines[1:]:
        outcome, gold = outcome_from_record(json.loads(line))
        outcomes.append(outcome)
        golds.append(gold)
    return header, outcomes, golds


def write_manifest(path: Path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
