"""Command-line front door.

    verikb index  --kb <kb.jsonl> --out <snapshot.vkbi>
    verikb run    --config <config.json> [--resume]
    verikb report --dir <run-output-dir>

Exit code discipline: per-claim stage failures are data (recorded in the
outcomes, exit 0); only configuration and I/O errors exit 1. API keys are
read from environment variables named in the config, never from argv.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import (
    ConfigError,
    ExperimentConfig,
    build_classifier,
    build_scorer,
    config_hash,
    load_config,
)
from .corpus import ClaimTask, CorpusError, RetrieverKind, load_kb, load_task
from .evaluation import ExperimentResult, emit_report, summarize_cell
from .policy import (
    BestEvidenceTask,
    KbPolicy,
    KbRegistry,
    SingleKb,
    run_task_policy,
    validate_policy,
)
from .retrieval import (
    FixtureRetriever,
    IndexedRetriever,
    SnapshotError,
    WebSearchRetriever,
    build_index,
    load_index,
    save_index,
)
from .runio import (
    cell_file_stem,
    read_cell,
    read_manifest,
    write_cell,
    write_manifest,
)


def cmd_index(kb_path: str, out_path: str) -> int:
    try:
        kb = load_kb(kb_path, name=Path(kb_path).stem)
        index = build_index(kb)
        save_index(kb, index, out_path)
    except (CorpusError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"docs={index.doc_count} avg_doc_length={index.avg_doc_length:.2f}")
    return 0


def _build_registry(config: ExperimentConfig) -> KbRegistry:
    registry = KbRegistry()
    for spec in config.kbs:
        if spec.kind is RetrieverKind.INDEXED:
            if spec.snapshot is not None:
                kb, index = load_index(spec.snapshot)
                kb = type(kb)(
                    name=spec.name, documents=kb.documents, retriever_kind=kb.retriever_kind
                )
                registry.add(IndexedRetriever(kb, index))
            else:
                kb = load_kb(spec.path, name=spec.name)
                registry.add(IndexedRetriever(kb, build_index(kb)))
        elif spec.kind is RetrieverKind.FIXTURE:
            registry.add(FixtureRetriever.from_file(spec.fixture_path, name=spec.name))
        else:
            registry.add(
                WebSearchRetriever(
                    name=spec.name,
                    endpoint=spec.endpoint,
                    api_key_env=spec.api_key_env,
                    hits=spec.hits,
                )
            )
    return registry


def _cell_kb(policy: KbPolicy, outcomes) -> str | None:
    if isinstance(policy, SingleKb):
        return policy.kb
    if isinstance(policy, BestEvidenceTask) and outcomes:
        return outcomes[0].chosen_kb
    return None


def cmd_run(config_path: str, resume: bool = False) -> int:
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1

    chash = config_hash(config.raw)
    try:
        registry = _build_registry(config)
        tasks: list[ClaimTask] = [
            load_task(path, name=name) for name, path in config.tasks
        ]
    except (CorpusError, SnapshotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    policy_problems: list[str] = []
    for policy in config.policies:
        policy_problems.extend(validate_policy(policy, registry))
    if policy_problems:
        for problem in policy_problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1

    scorer = build_scorer(config.scorer_spec)
    classifier = build_classifier(config.classifier_spec)

    out_dir = config.output_dir
    outcomes_dir = out_dir / "outcomes"
    reports_dir = out_dir / "reports"
    outcomes_dir.mkdir(parents=True, exist_ok=True)
    reports_dir.mkdir(parents=True, exist_ok=True)

    started_at = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    results: list[ExperimentResult] = []
    failure_counts: dict[str, int] = {}
    cells: list[dict] = []
    for task in tasks:
        golds = [claim.gold for claim in task.claims]
        for policy in config.policies:
            stem = cell_file_stem(task.name, policy.label())
            cell_path = outcomes_dir / f"{stem}.jsonl"
            done_path = cell_path.with_suffix(".done")
            if resume and done_path.exists() and cell_path.exists():
                header, outcomes, stored_golds = read_cell(cell_path)
                kb = header.get("kb")
                golds_for_cell = stored_golds
                print(f"cell {stem}: cached")
            else:
                outcomes = run_task_policy(
                    task, policy, registry, scorer, classifier, workers=config.workers
                )
                kb = _cell_kb(policy, outcomes)
                golds_for_cell = golds
                write_cell(
                    cell_path, chash, task.name, policy.label(), kb, outcomes, golds
                )
                print(f"cell {stem}: computed ({len(outcomes)} claims)")
            for outcome in outcomes:
                if outcome.failure:
                    failure_counts[outcome.failure] = (
                        failure_counts.get(outcome.failure, 0) + 1
                    )
                for _, kind in outcome.partial_failures:
                    key = f"partial_{kind}"
                    failure_counts[key] = failure_counts.get(key, 0) + 1
            results.append(
                summarize_cell(
                    task.name, policy.label(), kb, outcomes, golds_for_cell, seed=config.seed
                )
            )
            cells.append({"task": task.name, "policy": policy.label(), "file": cell_path.name})

    task_order = [task.name for task in tasks]
    policy_order = [policy.label() for policy in config.policies]
    emit_report(results, reports_dir, chash, task_order, policy_order)
    write_manifest(
        out_dir / "run_manifest.json",
        {
            "config_hash": chash,
            "tool_version": __version__,
            "seed": config.seed,
            "started_at": started_at,
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "task_order": task_order,
            "policy_order": policy_order,
            "cells": cells,
            "failure_counts": failure_counts,
        },
    )
    print(f"run complete: {len(results)} cells, reports in {reports_dir}")
    return 0


def cmd_report(run_dir: str) -> int:
    run_dir = Path(run_dir)
    manifest_path = run_dir / "run_manifest.json"
    outcomes_dir = run_dir / "outcomes"
    if not manifest_path.exists() or not outcomes_dir.is_dir():
        print(f"error: {run_dir} is not a completed run directory", file=sys.stderr)
        return 1
    manifest = read_manifest(manifest_path)
    results = []
    for cell in manifest.get("cells", []):
        cell_path = outcomes_dir / cell["file"]
        if not cell_path.exists():
            print(f"error: missing cell file {cell_path}", file=sys.stderr)
            return 1
        header, outcomes, golds = read_cell(cell_path)
        results.append(
            summarize_cell(
                header["task"],
                header["policy"],
                header.get("kb"),
                outcomes,
                golds,
                seed=manifest["seed"],
            )
        )
    if not results:
        print("error: run contains no cells", file=sys.stderr)
        return 1
    emit_report(
        results,
        run_dir / "reports",
        manifest["config_hash"],
        manifest.get("task_order"),
        manifest.get("policy_order"),
    )
    print(f"re-rendered {len(results)} cells")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="verikb",
        description="Claim verification with swappable knowledge bases",
    )
    parser.add_argument("--version", action="version", version=f"verikb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build a KB index snapshot")
    p_index.add_argument("--kb", required=True, help="KB JSON-lines file")
    p_index.add_argument("--out", required=True, help="snapshot output path")

    p_run = sub.add_parser("run", help="run an experiment matrix")
    p_run.add_argument("--config", required=True, help="experiment config JSON")
    p_run.add_argument(
        "--resume", action="store_true", help="skip cells with a .done sentinel"
    )

    p_report = sub.add_parser("report", help="re-render reports from stored outcomes")
    p_report.add_argument("--dir", required=True, help="run output directory")

    args = parser.parse_args(argv)
    if args.command == "index":
        return cmd_index(args.kb, args.out)
    if args.command == "run":
        return cmd_run(args.config, resume=args.resume)
    return cmd_report(args.dir)


if __name__ == "__main__":
    sys.exit(main())
