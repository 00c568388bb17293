"""Constraint handling, cluster-count inference, and constrained k-means."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstraintInconsistencyError, FormatError, InfeasibleAssignmentError
from .textproc import TokenDoc
from .vsm import ReducedDataSet

log = logging.getLogger(__name__)

IndexPair = tuple[int, int]


def _canon_pair(a, b):
    """Canonical unordered pair; self-pairs are meaningless and rejected."""
    if a == b:
        raise FormatError(f"constraint pairs a document with itself: {a!r}")
    try:
        return (a, b) if a < b else (b, a)
    except TypeError as exc:
        raise FormatError(f"constraint endpoints not comparable: {a!r}, {b!r}") from exc


@dataclass(frozen=True)
class ConstraintSet:
    """Unordered must-link and cannot-link document pairs."""

    must: frozenset[tuple]
    cannot: frozenset[tuple]

    @classmethod
    def from_pairs(cls, must: Iterable, cannot: Iterable) -> "ConstraintSet":
        must_set = frozenset(_canon_pair(a, b) for a, b in must)
        cannot_set = frozenset(_canon_pair(a, b) for a, b in cannot)
        overlap = must_set & cannot_set
        if overlap:
            raise ConstraintInconsistencyError(min(overlap))
        return cls(must_set, cannot_set)

    @classmethod
    def empty(cls) -> "ConstraintSet":
        return cls(frozenset(), frozenset())


def close_constraints(raw: ConstraintSet) -> ConstraintSet:
    """Close must links transitively and lift cannot links to components.

    If a document must link to another that cannot link to a third, the first
    cannot link to the third either. A cannot link landing inside one must
    component makes the set unsatisfiable and raises
    ConstraintInconsistencyError naming the offending pair.
    """
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in raw.must:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    for a, b in raw.cannot:
        find(a)
        find(b)

    groups: dict = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)

    must_closed = set()
    for members in groups.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                must_closed.add(_canon_pair(members[i], members[j]))

    cannot_closed = set()
    for a, b in raw.cannot:
        if find(a) == find(b):
            raise ConstraintInconsistencyError((a, b))
        for x in groups[find(a)]:
            for y in groups[find(b)]:
                cannot_closed.add(_canon_pair(x, y))

    return ConstraintSet(frozenset(must_closed), frozenset(cannot_closed))


def load_constraints(path: str | Path) -> ConstraintSet:
    """Read {"must": [[id,id],...], "cannot": [[id,id],...]} from JSON."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read constraints file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"constraints file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise FormatError("constraints file must hold an object with must/cannot lists")

    def pairs(kind: str) -> list[tuple]:
        out = []
        for entry in payload.get(kind, []):
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise FormatError(f"{kind} entry is not a pair: {entry!r}")
            for item in entry:
                if isinstance(item, bool) or not isinstance(item, (str, int)):
                    raise FormatError(
                        f"constraint endpoint must be a doc id or index: {item!r}"
                    )
            out.append((entry[0], entry[1]))
        return out

    return ConstraintSet.from_pairs(pairs("must"), pairs("cannot"))


def infer_k(
    docs: Sequence[TokenDoc] | Sequence[Sequence[str]],
    m: int | None = None,
    shared: str = "any",
) -> int:
    """Estimate the cluster count from frequent word bigrams.

    Consecutive token pairs are counted order-insensitively and merged; then,
    with shared="any", no two kept bigrams may share a word (the more frequent
    wins, lexicographically smaller wins ties); with shared="exact" only
    identical word pairs compete, which the merge already resolved. Bigrams
    seen once are dropped last. The survivor count, clamped into [2, m-1], is
    the estimate.
    """
    if shared not in ("any", "exact"):
        raise ValueError(f"shared must be 'any' or 'exact', got {shared!r}")
    token_lists = [
        list(d.tokens) if isinstance(d, TokenDoc) else list(d) for d in docs
    ]
    if m is None:
        m = len(token_lists)
    counts: dict[tuple[str, str], int] = {}
    for toks in token_lists:
        for a, b in zip(toks, toks[1:]):
            key = (a, b) if a <= b else (b, a)
            counts[key] = counts.get(key, 0) + 1
    survivors = 0
    if shared == "any":
        used: set[str] = set()
        for (a, b), count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            if a in used or b in used:
                continue
            used.add(a)
            used.add(b)
            if count > 1:
                survivors += 1
    else:
        survivors = sum(1 for count in counts.values() if count > 1)
    lo, hi = 2, max(2, m - 1)
    k = min(max(survivors, lo), hi)
    if k != survivors:
        log.warning("bigram estimate %d clamped to %d for %d docs", survivors, k, m)
    return k


@dataclass(eq=False)
class ClusterAssignment:
    """Result of a constrained k-means run."""

    k: int
    labels: tuple[int, ...]
    centroids: np.ndarray  # (k, r)
    iterations: int
    seed: int
    inertia: float


class _Stuck(Exception):
    def __init__(self, doc: int):
        self.doc = doc


def _adjacency(pairs: Iterable[IndexPair]) -> dict[int, tuple[int, ...]]:
    adj: dict[int, set[int]] = {}
    for a, b in pairs:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return {i: tuple(sorted(js)) for i, js in adj.items()}


def _violates(
    i: int,
    c: int,
    labels: np.ndarray,
    must_adj: Mapping[int, tuple[int, ...]],
    cannot_adj: Mapping[int, tuple[int, ...]],
) -> bool:
    for j in must_adj.get(i, ()):
        assigned = labels[j]
        if assigned != -1 and assigned != c:
            return True
    for j in cannot_adj.get(i, ()):
        if labels[j] == c:
            return True
    return False


def _means(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    centroids = np.zeros((k, points.shape[1]))
    for c in range(k):
        members = points[labels == c]
        if len(members):
            centroids[c] = members.mean(axis=0)
    return centroids


def _repair_empty(
    points: np.ndarray,
    centroids: np.ndarray,
    labels: np.ndarray,
    empty: int,
    must_adj: Mapping[int, tuple[int, ...]],
    cannot_adj: Mapping[int, tuple[int, ...]],
) -> None:
    """Move the farthest movable point into an empty cluster.

    A point is movable when it has no must partners, its source cluster keeps
    at least one member, and no cannot partner already sits in the target.
    """
    dists = np.linalg.norm(points - centroids[labels], axis=1)
    sizes = np.bincount(labels, minlength=len(centroids))
    farthest = None
    for i in np.argsort(-dists, kind="stable"):
        i = int(i)
        if farthest is None:
            farthest = i
        if must_adj.get(i) or sizes[labels[i]] < 2:
            continue
        if any(labels[j] == empty for j in cannot_adj.get(i, ())):
            continue
        sizes[labels[i]] -= 1
        labels[i] = empty
        return
    raise _Stuck(farthest if farthest is not None else 0)


def _run_attempt(
    points: np.ndarray,
    k: int,
    must_adj: Mapping[int, tuple[int, ...]],
    cannot_adj: Mapping[int, tuple[int, ...]],
    seed: int,
    attempt: int,
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    m = len(points)
    rng = np.random.default_rng((seed, attempt))
    init = rng.choice(m, size=k, replace=False)
    centroids = points[init].copy()
    labels = np.full(m, -1, dtype=int)
    iterations = 0
    for iteration in range(1, max_iter + 1):
        new = np.full(m, -1, dtype=int)
        for i in range(m):
            dists = np.linalg.norm(centroids - points[i], axis=1)
            for c in np.argsort(dists, kind="stable"):
                if not _violates(i, int(c), new, must_adj, cannot_adj):
                    new[i] = int(c)
                    break
            if new[i] == -1:
                raise _Stuck(i)
        for c in range(k):
            if not np.any(new == c):
                _repair_empty(points, centroids, new, c, must_adj, cannot_adj)
        iterations = iteration
        if np.array_equal(new, labels):
            break
        labels = new
        centroids = _means(points, labels, k)
    centroids = _means(points, labels, k)
    return labels, centroids, iterations


def _clique_lower_bound(cannot: Iterable[IndexPair]) -> list[int]:
    """Greedily grow a clique in the cannot graph (best-effort, may undershoot)."""
    adj: dict[int, set[int]] = {}
    for a, b in cannot:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    clique: list[int] = []
    for node in sorted(adj, key=lambda n: (-len(adj[n]), n)):
        if all(node in adj[member] for member in clique):
            clique.append(node)
    return clique


def _index_pairs(
    pairs: Iterable[tuple], id_index: Mapping[str, int], m: int
) -> list[IndexPair]:
    """Resolve id or index constraint endpoints to point indices."""
    out = []
    for a, b in pairs:
        resolved = []
        for item in (a, b):
            if isinstance(item, str):
                if item not in id_index:
                    raise FormatError(f"constraint names unknown document {item!r}")
                resolved.append(id_index[item])
            else:
                idx = int(item)
                if not 0 <= idx < m:
                    raise FormatError(
                        f"constraint index {idx} out of range for {m} documents"
                    )
                resolved.append(idx)
        out.append((resolved[0], resolved[1]))
    return out


def cop_kmeans(
    data: ReducedDataSet | np.ndarray,
    k: int,
    constraints: ConstraintSet | None = None,
    seed: int = 0,
    max_iter: int = 100,
    restarts: int = 10,
) -> ClusterAssignment:
    """Cluster documents into k groups honoring must/cannot link constraints.

    Each restart draws k distinct points as initial centroids, assigns
    documents in input order to the nearest centroid (Euclidean) that keeps
    every constraint satisfied against documents already assigned in the same
    pass (lowest index wins distance ties), then recomputes centroids as
    member means until the labeling stops changing or `max_iter` passes
    elapse. The lowest-inertia feasible restart wins; if every restart
    strands some document, InfeasibleAssignmentError identifies the stuck
    one. Constraint endpoints may be doc ids (resolved against the data's
    doc_ids) or point indices.
    """
    if isinstance(data, ReducedDataSet):
        points = np.asarray(data.points, dtype=float)
        id_index = {doc_id: i for i, doc_id in enumerate(data.doc_ids)}
    else:
        points = np.asarray(data, dtype=float)
        id_index = {}
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    m = len(points)
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > m:
        raise ValueError(f"k={k} exceeds the number of documents ({m})")
    if max_iter < 1 or restarts < 1:
        raise ValueError("max_iter and restarts must be at least 1")
    raw = constraints or ConstraintSet.empty()
    resolved = ConstraintSet.from_pairs(
        _index_pairs(raw.must, id_index, m), _index_pairs(raw.cannot, id_index, m)
    )
    closed = close_constraints(resolved)
    must_pairs = list(closed.must)
    cannot_pairs = list(closed.cannot)
    clique = _clique_lower_bound(cannot_pairs)
    if len(clique) > k:
        raise InfeasibleAssignmentError(doc_id=clique[-1], attempts=0)
    must_adj = _adjacency(must_pairs)
    cannot_adj = _adjacency(cannot_pairs)

    best: ClusterAssignment | None = None
    stuck_doc: int | None = None
    for attempt in range(restarts):
        try:
            labels, centroids, iterations = _run_attempt(
                points, k, must_adj, cannot_adj, seed, attempt, max_iter
            )
        except _Stuck as failure:
            stuck_doc = failure.doc
            continue
        inertia = float(np.sum((points - centroids[labels]) ** 2))
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(
                k=k,
                labels=tuple(int(x) for x in labels),
                centroids=centroids,
                iterations=iterations,
                seed=seed,
                inertia=inertia,
            )
    if best is None:
        raise InfeasibleAssignmentError(
            doc_id=stuck_doc if stuck_doc is not None else 0, attempts=restarts
        )
    return best
