"""Experiment configuration: parsing, exhaustive validation, and factories.

Validation collects every problem instead of stopping at the first, so a
misconfigured experiment matrix is fixable in one pass. Relative paths
are resolved against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import RetrieverKind
from .evidence import LexicalScorer, RemoteScorer
from .policy import (
    BestEvidenceClaim,
    BestEvidenceTask,
    KbPolicy,
    NoKb,
    SingleKb,
    UnionKb,
)
from .verdict import DEFAULT_TAU, NativeClassifier, RemoteClassifier

DEFAULT_WORKERS = 1


class ConfigError(Exception):
    """Carries the full list of validation problems."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class KbSpec:
    name: str
    kind: RetrieverKind
    path: Path | None = None
    snapshot: Path | None = None
    fixture_path: Path | None = None
    endpoint: str | None = None
    api_key_env: str | None = None
    hits: int = 10


@dataclass
class ExperimentConfig:
    tasks: list[tuple[str, Path]]
    kbs: list[KbSpec]
    policies: list[KbPolicy]
    scorer_spec: dict
    classifier_spec: dict
    output_dir: Path
    workers: int = DEFAULT_WORKERS
    seed: int = 42
    raw: dict = field(default_factory=dict)


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _parse_policy(spec: dict, idx: int, problems: list[str]) -> KbPolicy | None:
    kind = spec.get("type")
    if kind == "single":
        if not isinstance(spec.get("kb"), str):
            problems.append(f"policies[{idx}]: single policy needs a 'kb' name")
            return None
        return SingleKb(spec["kb"])
    if kind in ("union", "best_evidence_task", "best_evidence_claim"):
        kbs = spec.get("kbs")
        if not isinstance(kbs, list) or not all(isinstance(k, str) for k in kbs):
            problems.append(f"policies[{idx}]: {kind} policy needs a 'kbs' name list")
            return None
        cls = {
            "union": UnionKb,
            "best_evidence_task": BestEvidenceTask,
            "best_evidence_claim": BestEvidenceClaim,
        }[kind]
        return cls(tuple(kbs))
    if kind == "none":
        return NoKb()
    problems.append(f"policies[{idx}]: unknown policy type {kind!r}")
    return None


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem."""
    path = Path(path)
    problems: list[str] = []
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"])
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])
    base = path.parent

    def resolve(p: str) -> Path:
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base / candidate

    # tasks
    tasks: list[tuple[str, Path]] = []
    raw_tasks = raw.get("tasks")
    if not isinstance(raw_tasks, list) or not raw_tasks:
        problems.append("'tasks' must be a non-empty list")
    else:
        seen_tasks = set()
        for i, entry in enumerate(raw_tasks):
            if not isinstance(entry, dict) or "name" not in entry or "path" not in entry:
                problems.append(f"tasks[{i}]: needs 'name' and 'path'")
                continue
            if entry["name"] in seen_tasks:
                problems.append(f"tasks[{i}]: duplicate task name {entry['name']!r}")
            seen_tasks.add(entry["name"])
            task_path = resolve(entry["path"])
            if not task_path.exists():
                problems.append(f"tasks[{i}]: file not found: {task_path}")
            tasks.append((entry["name"], task_path))

    # knowledge bases
    kb_specs: list[KbSpec] = []
    kb_names: set[str] = set()
    raw_kbs = raw.get("kbs")
    if not isinstance(raw_kbs, list):
        problems.append("'kbs' must be a list")
        raw_kbs = []
    for i, entry in enumerate(raw_kbs):
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            problems.append(f"kbs[{i}]: needs 'name' and 'kind'")
            continue
        name = entry["name"]
        if name in kb_names:
            problems.append(f"kbs[{i}]: duplicate KB name {name!r}")
        kb_names.add(name)
        try:
            kind = RetrieverKind(entry["kind"])
        except ValueError:
            problems.append(f"kbs[{i}]: unknown kind {entry['kind']!r}")
            continue
        spec = KbSpec(name=name, kind=kind)
        if kind is RetrieverKind.INDEXED:
            if "snapshot" in entry:
                spec.snapshot = resolve(entry["snapshot"])
                if not spec.snapshot.exists():
                    problems.append(f"kbs[{i}]: snapshot not found: {spec.snapshot}")
            elif "path" in entry:
                spec.path = resolve(entry["path"])
                if not spec.path.exists():
                    problems.append(f"kbs[{i}]: file not found: {spec.path}")
            else:
                problems.append(f"kbs[{i}]: indexed KB needs 'path' or 'snapshot'")
        elif kind is RetrieverKind.FIXTURE:
            if "fixture_path" not in entry:
                problems.append(f"kbs[{i}]: fixture KB needs 'fixture_path'")
            else:
                spec.fixture_path = resolve(entry["fixture_path"])
                if not spec.fixture_path.exists():
                    problems.append(f"kbs[{i}]: file not found: {spec.fixture_path}")
        else:  # web search
            if not isinstance(entry.get("endpoint"), str):
                problems.append(f"kbs[{i}]: websearch KB needs an 'endpoint' URL")
            spec.endpoint = entry.get("endpoint")
            spec.api_key_env = entry.get("api_key_env")
            spec.hits = int(entry.get("hits", 10))
        kb_specs.append(spec)

    # policies
    policies: list[KbPolicy] = []
    raw_policies = raw.get("policies")
    if not isinstance(raw_policies, list) or not raw_policies:
        problems.append("'policies' must be a non-empty list")
        raw_policies = []
    for i, entry in enumerate(raw_policies):
        if not isinstance(entry, dict):
            problems.append(f"policies[{i}]: must be an object")
            continue
        policy = _parse_policy(entry, i, problems)
        if policy is None:
            continue
        if not isinstance(policy, NoKb):
            names = (policy.kb,) if isinstance(policy, SingleKb) else policy.kbs
            if not names:
                problems.append(f"policies[{i}]: KB list is empty")
            if len(set(names)) != len(names):
                problems.append(f"policies[{i}]: duplicate KB names {names}")
            for name in names:
                if name not in kb_names:
                    problems.append(f"policies[{i}]: unknown KB {name!r}")
        policies.append(policy)

    # scorer / classifier
    scorer_spec = raw.get("scorer", {"kind": "native"})
    if not isinstance(scorer_spec, dict) or scorer_spec.get("kind") not in ("native", "remote"):
        problems.append("'scorer' must have kind 'native' or 'remote'")
    elif scorer_spec.get("kind") == "remote" and not isinstance(scorer_spec.get("endpoint"), str):
        problems.append("remote scorer needs an 'endpoint' URL")
    classifier_spec = raw.get("classifier", {"kind": "native"})
    if not isinstance(classifier_spec, dict) or classifier_spec.get("kind") not in (
        "native",
        "remote",
    ):
        problems.append("'classifier' must have kind 'native' or 'remote'")
    elif classifier_spec.get("kind") == "remote" and not isinstance(
        classifier_spec.get("endpoint"), str
    ):
        problems.append("remote classifier needs an 'endpoint' URL")

    # run parameters
    if "output_dir" not in raw:
        problems.append("'output_dir' is required")
    output_dir = resolve(str(raw.get("output_dir", "out")))
    workers = raw.get("workers", DEFAULT_WORKERS)
    if not isinstance(workers, int) or workers < 1:
        problems.append("'workers' must be an integer >= 1")
        workers = DEFAULT_WORKERS
    seed = raw.get("seed", 42)
    if not isinstance(seed, int):
        problems.append("'seed' must be an integer")
        seed = 42

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        tasks=tasks,
        kbs=kb_specs,
        policies=policies,
        scorer_spec=scorer_spec,
        classifier_spec=classifier_spec,
        output_dir=output_dir,
        workers=workers,
        seed=seed,
        raw=raw,
    )


def build_scorer(spec: dict):
    if spec.get("kind") == "remote":
        return RemoteScorer(
            endpoint=spec["endpoint"],
            max_retries=int(spec.get("max_retries", 3)),
            backoff=float(spec.get("backoff", 0.5)),
            timeout=float(spec.get("timeout", 30.0)),
        )
    return LexicalScorer()


def build_classifier(spec: dict):
    if spec.get("kind") == "remote":
        return RemoteClassifier(
            endpoint=spec["endpoint"],
            max_retries=int(spec.get("max_retries", 3)),
            backoff=float(spec.get("backoff", 0.5)),
            timeout=float(spec.get("timeout", 30.0)),
        )
    return NativeClassifier(tau=float(spec.get("tau", DEFAULT_TAU)))
