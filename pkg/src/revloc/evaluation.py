"""Cluster quality and localization accuracy metrics."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import ClusterAssignment
from .errors import FormatError
from .localization import LocalizationRanking
from .vsm import ReducedDataSet

log = logging.getLogger(__name__)


def _points_of(data) -> np.ndarray:
    return data.points if isinstance(data, ReducedDataSet) else np.asarray(data, dtype=float)


def _labels_of(assignment) -> np.ndarray:
    if isinstance(assignment, ClusterAssignment):
        return np.asarray(assignment.labels, dtype=int)
    return np.asarray(list(assignment), dtype=int)


def dbi(data, assignment) -> float:
    """Davies-Bouldin index of a clustering: lower is tighter.

    Per cluster, scatter is the RMS distance of members to their centroid.
    Each cluster pairs with its worst neighbor by (scatter_i + scatter_j)
    over centroid distance, and the index averages those worst ratios.
    """
    points = _points_of(data)
    labels = _labels_of(assignment)
    if points.ndim != 2 or points.shape[0] != labels.shape[0]:
        raise ValueError("points and labels must agree on the number of documents")
    clusters = np.unique(labels)
    k = clusters.shape[0]
    if k < 2:
        raise ValueError("Davies-Bouldin index needs at least two clusters")
    centroids = np.stack([points[labels == c].mean(axis=0) for c in clusters])
    scatters = np.empty(k)
    for i, c in enumerate(clusters):
        members = points[labels == c]
        scatters[i] = math.sqrt(
            float(np.mean(np.sum((members - centroids[i]) ** 2, axis=1)))
        )
    worst = np.zeros(k)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            separation = float(np.linalg.norm(centroids[i] - centroids[j]))
            if separation == 0.0:
                raise ValueError(
                    f"clusters {int(clusters[i])} and {int(clusters[j])} share a centroid"
                )
            ratio = (scatters[i] + scatters[j]) / separation
            if ratio > worst[i]:
                worst[i] = ratio
    return float(np.mean(worst))


def load_ground_truth(path: str | Path) -> dict[str, set[str]]:
    """Read a review-id to relevant-file-paths map from a JSON object."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read ground truth file {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"ground truth is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("ground truth must be an object of review_id -> [paths]")
    truth: dict[str, set[str]] = {}
    for key, value in data.items():
        if not isinstance(value, list) or not all(isinstance(p, str) for p in value):
            raise FormatError(f"ground truth entry {key!r} must be a list of paths")
        truth[str(key)] = set(value)
    return truth


def resolve_truth(review_id: str, truth: Mapping[str, set[str]]) -> set[str] | None:
    """Relevant paths for a review id, falling back to its review-level id.

    Sentence-level ids look like "review:seq"; when no exact entry exists the
    portion before the colon is tried, so review-level labels cover all of a
    review's sentences.
    """
    if review_id in truth:
        return truth[review_id]
    base = review_id.split(":", 1)[0]
    if base != review_id and base in truth:
        return truth[base]
    return None


def top_k_accuracy(
    rankings: Sequence[LocalizationRanking],
    truth: Mapping[str, set[str]],
    k: int,
) -> float:
    """Fraction of evaluable rankings with a relevant path in the first k."""
    hits = 0
    total = 0
    for ranking in rankings:
        relevant = resolve_truth(ranking.review_id, truth)
        if relevant is None:
            continue
        total += 1
        if any(path in relevant for path, _ in ranking.entries[:k]):
            hits += 1
    if total == 0:
        return 0.0
    return hits / total


def ndcg_of_vector(relevances: Sequence[float], k: int) -> float:
    """Discounted cumulative gain of the first k positions, normalized.

    The ideal reorders the full observed relevance vector best-first, so the
    score compares the ranking against its own best permutation. Zero when
    the ideal gain is zero (nothing relevant was retrieved at all).
    """
    if k < 1:
        raise ValueError("k must be at least 1")

    def dcg(values: Sequence[float]) -> float:
        return sum(
            value / math.log2(pos + 1) if pos > 1 else value
            for pos, value in enumerate(values[:k], start=1)
        )

    actual = dcg(list(relevances))
    ideal = dcg(sorted(relevances, reverse=True))
    if ideal == 0.0:
        return 0.0
    return actual / ideal


def ndcg_at_k(ranking: LocalizationRanking, relevant: set[str], k: int) -> float:
    """NDCG of one ranking against a set of relevant paths."""
    relevances = [1.0 if path in relevant else 0.0 for path, _ in ranking.entries]
    return ndcg_of_vector(relevances, k)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy summary over a batch of rankings."""

    evaluated: int
    excluded: int  # rankings with no ground truth entry
    top_k: dict  # k -> hit fraction
    ndcg: dict  # k -> mean NDCG
    dbi: float | None = None
    details: tuple = ()  # per-review rows


def evaluate_rankings(
    rankings: Sequence[LocalizationRanking],
    truth: Mapping[str, set[str]],
    ks: Iterable[int] = (1, 5, 10),
    dbi_value: float | None = None,
) -> EvalReport:
    """Score rankings against ground truth at each cutoff.

    Rankings without a truth entry are excluded (counted, not scored). The
    report carries per-review detail rows with hit and NDCG per cutoff.
    """
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise ValueError("cutoffs must be positive integers")
    hits = {k: 0 for k in ks}
    gains = {k: 0.0 for k in ks}
    details: list[dict] = []
    evaluated = 0
    excluded = 0
    for ranking in rankings:
        relevant = resolve_truth(ranking.review_id, truth)
        if relevant is None:
            excluded += 1
            continue
        evaluated += 1
        row: dict = {"review_id": ranking.review_id}
        for k in ks:
            hit = any(path in relevant for path, _ in ranking.entries[:k])
            gain = ndcg_at_k(ranking, relevant, k)
            hits[k] += int(hit)
            gains[k] += gain
            row[f"top_{k}"] = bool(hit)
            row[f"ndcg_{k}"] = gain
        details.append(row)
    top_k = {k: (hits[k] / evaluated if evaluated else 0.0) for k in ks}
    ndcg = {k: (gains[k] / evaluated if evaluated else 0.0) for k in ks}
    return EvalReport(
        evaluated=evaluated,
        excluded=excluded,
        top_k=top_k,
        ndcg=ndcg,
        dbi=dbi_value,
        details=tuple(details),
    )


def format_report(report: EvalReport) -> str:
    """Human-readable multi-line summary of an evaluation report."""
    lines = [f"evaluated {report.evaluated} rankings ({report.excluded} without truth)"]
    if report.dbi is not None:
        lines.append(f"dbi        {report.dbi:.4f}")
    for k in sorted(report.top_k):
        lines.append(f"top-{k:<3d}   {report.top_k[k]:.4f}")
    for k in sorted(report.ndcg):
        lines.append(f"ndcg@{k:<3d}  {report.ndcg[k]:.4f}")
    return "\n".join(lines)
