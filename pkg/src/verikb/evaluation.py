"""Metrics and reporting: accuracy, confusion matrices, bootstrap CIs,
Pearson correlation with significance, evidence-quality stats, and the
report files a run emits.

Values are kept at full precision internally; rounding happens only at
display time (published normalized matrices visibly sum to 99-101 because
of display rounding, and that error must not propagate).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .corpus import LABELS, Label
from .policy import ClaimOutcome

DEFAULT_RESAMPLES = 200
DEFAULT_SEED = 42
CI_Z = 1.96


class EmptyEvaluationError(Exception):
    pass


class LengthMismatchError(Exception):
    pass


class TooFewPointsError(Exception):
    pass


class DegenerateVarianceError(Exception):
    pass


_LABEL_POS = {label: i for i, label in enumerate(LABELS)}


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 gold-vs-predicted table (rows gold, cols predicted, S/R/N order).

    normalized cells sum to 100; the trace of the normalized matrix is the
    label accuracy in percent.
    """

    counts: tuple[tuple[int, ...], ...]
    normalized: tuple[tuple[float, ...], ...]

    @property
    def accuracy(self) -> float:
        return sum(self.normalized[i][i] for i in range(3))

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def confusion(outcomes: Sequence[ClaimOutcome], golds: Sequence[Label]) -> ConfusionMatrix:
    if len(outcomes) != len(golds):
        raise LengthMismatchError(f"{len(outcomes)} outcomes vs {len(golds)} golds")
    if not outcomes:
        raise EmptyEvaluationError("no labeled claims to evaluate")
    counts = [[0, 0, 0] for _ in range(3)]
    for outcome, gold in zip(outcomes, golds):
        counts[_LABEL_POS[gold]][_LABEL_POS[outcome.verdict.label]] += 1
    total = len(outcomes)
    normalized = tuple(
        tuple(cell * 100.0 / total for cell in row) for row in counts
    )
    return ConfusionMatrix(
        counts=tuple(tuple(row) for row in counts), normalized=normalized
    )


def normalized_matrix(cells: Sequence[Sequence[float]]) -> ConfusionMatrix:
    """Wrap an already-normalized 3x3 table (e.g. a published one)."""
    return ConfusionMatrix(
        counts=tuple(tuple(int(round(c)) for c in row) for row in cells),
        normalized=tuple(tuple(float(c) for c in row) for row in cells),
    )


def aggregate_matrices(
    matrices: Sequence[ConfusionMatrix], weights: Sequence[float] | None = None
) -> ConfusionMatrix:
    """Cell-wise (optionally weighted) mean of normalized matrices.

    With weights proportional to each matrix's claim count this equals
    pooling all claims into one tally and normalizing, which is how
    multi-task summaries should be aggregated.
    """
    if not matrices:
        raise EmptyEvaluationError("no matrices to aggregate")
    if weights is not None and len(weights) != len(matrices):
        raise LengthMismatchError(f"{len(matrices)} matrices vs {len(weights)} weights")
    if weights is None:
        weights = [1.0] * len(matrices)
    wsum = float(sum(weights))
    normalized = [[0.0] * 3 for _ in range(3)]
    counts = [[0] * 3 for _ in range(3)]
    for matrix, weight in zip(matrices, weights):
        for i in range(3):
            for j in range(3):
                normalized[i][j] += matrix.normalized[i][j] * weight / wsum
                counts[i][j] += matrix.counts[i][j]
    return ConfusionMatrix(
        counts=tuple(tuple(row) for row in counts),
        normalized=tuple(tuple(row) for row in normalized),
    )


@dataclass(frozen=True)
class BootstrapCI:
    mean: float
    half_width: float
    n_resamples: int
    level: float = 0.95


def bootstrap_accuracy(
    correct_flags: Sequence[bool],
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = DEFAULT_SEED,
) -> BootstrapCI:
    """Resample-with-replacement accuracy CI: mean of resample accuracies
    (percent) +- 1.96 * their standard deviation."""
    if not correct_flags:
        raise EmptyEvaluationError("no flags to bootstrap")
    flags = np.asarray(correct_flags, dtype=np.float64)
    n = flags.shape[0]
    rng = np.random.default_rng(seed)
    accuracies = np.empty(n_resamples, dtype=np.float64)
    for i in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        accuracies[i] = flags[idx].mean() * 100.0
    std = float(accuracies.std(ddof=1)) if n_resamples > 1 else 0.0
    return BootstrapCI(
        mean=float(accuracies.mean()),
        half_width=CI_Z * std,
        n_resamples=n_resamples,
    )


@dataclass(frozen=True)
class CorrelationReport:
    r: float
    p_value: float
    n: int
    points: tuple[tuple[float, float, str], ...]


def pearson(points: Sequence[tuple]) -> CorrelationReport:
    """Product-moment correlation with a two-sided t-test p-value.

    The p-value uses the exact Student-t CDF via the regularized
    incomplete beta function, which matters at the small n (18-24 points)
    these comparisons run at.
    """
    if len(points) < 3:
        raise TooFewPointsError(f"need >= 3 points, got {len(points)}")
    labeled = [
        (float(p[0]), float(p[1]), str(p[2]) if len(p) > 2 else "") for p in points
    ]
    xs = np.array([p[0] for p in labeled])
    ys = np.array([p[1] for p in labeled])
    n = len(labeled)
    xd = xs - xs.mean()
    yd = ys - ys.mean()
    sxx = float(np.dot(xd, xd))
    syy = float(np.dot(yd, yd))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateVarianceError("zero variance in one coordinate")
    r = float(np.dot(xd, yd)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) >= 1.0:
        p_value = 0.0
    else:
        t_sq = r * r * df / (1.0 - r * r)
        p_value = float(betainc(df / 2.0, 0.5, df / (df + t_sq)))
    return CorrelationReport(r=r, p_value=p_value, n=n, points=tuple(labeled))


@dataclass(frozen=True)
class EvidenceQualityStats:
    mean_max_bm25: float
    mean_max_e: float


def quality_stats(outcomes: Sequence[ClaimOutcome]) -> EvidenceQualityStats:
    """Means of the per-claim best retrieval score and best evidence score;
    claims with an empty stage contribute 0."""
    if not outcomes:
        raise EmptyEvaluationError("no outcomes")
    n = len(outcomes)
    return EvidenceQualityStats(
        mean_max_bm25=sum(o.retrieval.max_score for o in outcomes) / n,
        mean_max_e=sum(o.evidence.max_score for o in outcomes) / n,
    )


@dataclass(frozen=True)
class ExperimentResult:
    task: str
    policy: str
    kb: str | None
    n_claims: int
    n_labeled: int
    accuracy: float | None
    matrix: ConfusionMatrix | None
    ci: BootstrapCI | None
    quality: EvidenceQualityStats
    failures: dict


def summarize_cell(
    task_name: str,
    policy_label: str,
    kb: str | None,
    outcomes: Sequence[ClaimOutcome],
    golds: Sequence[Label | None],
    seed: int = DEFAULT_SEED,
) -> ExperimentResult:
    """Fold one (task x policy) cell's outcomes into an ExperimentResult."""
    if len(outcomes) != len(golds):
        raise LengthMismatchError(f"{len(outcomes)} outcomes vs {len(golds)} golds")
    labeled = [(o, g) for o, g in zip(outcomes, golds) if g is not None]
    failures: dict[str, int] = {}
    for outcome in outcomes:
        if outcome.failure:
            failures[outcome.failure] = failures.get(outcome.failure, 0) + 1
    if labeled:
        matrix = confusion([o for o, _ in labeled], [g for _, g in labeled])
        flags = [o.verdict.label == g for o, g in labeled]
        ci = bootstrap_accuracy(flags, seed=seed)
        accuracy = matrix.accuracy
    else:
        matrix, ci, accuracy = None, None, None
    return ExperimentResult(
        task=task_name,
        policy=policy_label,
        kb=kb,
        n_claims=len(outcomes),
        n_labeled=len(labeled),
        accuracy=accuracy,
        matrix=matrix,
        ci=ci,
        quality=quality_stats(list(outcomes)),
        failures=failures,
    )


# ---------------------------------------------------------------------------
# Report emission. Every file opens with a header line carrying the config
# hash; floats in CSVs use repr so reloading them round-trips exactly.


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_report(
    results: Sequence[ExperimentResult],
    out_dir: str | Path,
    config_hash: str,
    task_order: Sequence[str] | None = None,
    policy_order: Sequence[str] | None = None,
) -> list[Path]:
    if not results:
        raise EmptyEvaluationError("no results to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = list(task_order) if task_order else sorted({r.task for r in results})
    policies = list(policy_order) if policy_order else sorted({r.policy for r in results})
    by_cell = {(r.task, r.policy): r for r in results}
    header = f"# config_hash={config_hash}\n"
    written: list[Path] = []

    def cell_acc(task: str, policy: str) -> float | None:
        r = by_cell.get((task, policy))
        return r.accuracy if r else None

    # accuracy matrix (CSV + Markdown), rows = policies, columns = tasks
    path = out_dir / "accuracy_table.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.write("policy," + ",".join(tasks) + "\n")
        for policy in policies:
            row = [policy]
            for task in tasks:
                acc = cell_acc(task, policy)
                row.append(_fmt(acc) if acc is not None else "")
            fh.write(",".join(row) + "\n")
    written.append(path)

    path = out_dir / "accuracy_table.md"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"<!-- config_hash={config_hash} -->\n")
        fh.write("| policy | " + " | ".join(tasks) + " |\n")
        fh.write("|" + "---|" * (len(tasks) + 1) + "\n")
        for policy in policies:
            cells = []
            for task in tasks:
                r = by_cell.get((task, policy))
                if r is None or r.accuracy is None:
                    cells.append("-")
                elif r.ci is not None:
                    cells.append(f"{r.accuracy:.2f} ± {r.ci.half_width:.2f}")
                else:
                    cells.append(f"{r.accuracy:.2f}")
            fh.write(f"| {policy} | " + " | ".join(cells) + " |\n")
    written.append(path)

    # confusion matrices, raw and normalized, one row per gold label
    for kind in ("raw", "normalized"):
        path = out_dir / f"confusion_{kind}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header)
            fh.write("task,policy,gold,pred_supported,pred_refuted,pred_not_enough_info\n")
            for task in tasks:
                for policy in policies:
                    r = by_cell.get((task, policy))
                    if r is None or r.matrix is None:
                        continue
                    table = r.matrix.counts if kind == "raw" else r.matrix.normalized
                    for label, row in zip(LABELS, table):
                        values = (
                            [str(v) for v in row] if kind == "raw" else [_fmt(v) for v in row]
                        )
                        fh.write(f"{task},{policy},{label.value}," + ",".join(values) + "\n")
        written.append(path)

    # per-cell bootstrap CIs
    path = out_dir / "bootstrap.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.write("task,policy,mean,half_width,n_resamples,level\n")
        for task in tasks:
            for policy in policies:
                r = by_cell.get((task, policy))
                if r is None or r.ci is None:
                    continue
                fh.write(
                    f"{task},{policy},{_fmt(r.ci.mean)},{_fmt(r.ci.half_width)},"
                    f"{r.ci.n_resamples},{_fmt(r.ci.level)}\n"
                )
    written.append(path)

    # quality-vs-accuracy scatter over single-KB cells
    scatter_rows = []
    for task in tasks:
        for policy in policies:
            r = by_cell.get((task, policy))
            if r is None or r.kb is None or not policy.startswith("single:"):
                continue
            if r.accuracy is None:
                continue
            scatter_rows.append(r)
    path = out_dir / "scatter.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.write("task,kb,mean_max_bm25,mean_max_e,accuracy\n")
        for r in scatter_rows:
            fh.write(
                f"{r.task},{r.kb},{_fmt(r.quality.mean_max_bm25)},"
                f"{_fmt(r.quality.mean_max_e)},{_fmt(r.accuracy)}\n"
            )
    written.append(path)

    # correlation summary over the scatter points
    def correlate(xs_key) -> dict | None:
        pts = [(xs_key(r), r.accuracy, f"{r.task}/{r.kb}") for r in scatter_rows]
        try:
            report = pearson(pts)
        except (TooFewPointsError, DegenerateVarianceError):
            return None
        return {
            "r": report.r,
            "p": report.p_value,
            "n": report.n,
            "r_squared": report.r * report.r,
        }

    summary = {
        "config_hash": config_hash,
        "bm25_vs_accuracy": correlate(lambda r: r.quality.mean_max_bm25),
        "evidence_vs_accuracy": correlate(lambda r: r.quality.mean_max_e),
        "note": "r_squared is r**2 by definition; externally reported (r, r^2) "
        "pairs that violate this are mutually inconsistent.",
    }
    path = out_dir / "correlation.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


def load_scatter_csv(path: str | Path) -> list[tuple[float, float, str]]:
    """Reload scatter.csv rows as (mean_max_e, accuracy, label) points."""
    points = []
    with open(path, encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    header = rows[0].strip().split(",")
    for line in rows[1:]:
        record = dict(zip(header, line.rstrip("\n").split(",")))
        points.append(
            (
                float(record["mean_max_e"]),
                float(record["accuracy"]),
                f"{record['task']}/{record['kb']}",
            )
        )
    return points
