"""Word-document matrix construction, df weighting, and PCA reduction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError
from .ioutil import atomic_write_text
from .textproc import TokenDoc

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DfTable:
    """Document-frequency weights: df(w) = ln(1 + f_w).

    Natural log is a free choice: any other base rescales every weight by the
    same constant, and the downstream similarity ratios cancel it out.
    """

    vocab: tuple[str, ...]
    occurrence: tuple[int, ...]  # f_w: documents containing each word
    df: tuple[float, ...]

    @classmethod
    def from_docs(cls, docs: Iterable[Iterable[str]]) -> "DfTable":
        seen: dict[str, int] = {}
        for doc in docs:
            for word in set(doc):
                seen[word] = seen.get(word, 0) + 1
        vocab = tuple(sorted(seen))
        occurrence = tuple(seen[w] for w in vocab)
        df = tuple(math.log(1 + c) for c in occurrence)
        return cls(vocab, occurrence, df)

    def weight(self, word: str) -> float:
        idx = self._index().get(word)
        return self.df[idx] if idx is not None else 0.0

    def _index(self) -> dict[str, int]:
        cached = getattr(self, "_idx", None)
        if cached is None:
            cached = {w: i for i, w in enumerate(self.vocab)}
            object.__setattr__(self, "_idx", cached)
        return cached

    def rescaled(self, factor: float) -> "DfTable":
        """Multiply every weight by `factor` (used to probe scale invariance)."""
        return DfTable(self.vocab, self.occurrence, tuple(v * factor for v in self.df))


@dataclass(eq=False)
class WordReviewMatrix:
    """Token counts per document, plus the df-scaled counterpart."""

    doc_ids: tuple[str, ...]
    vocab: tuple[str, ...]
    counts: np.ndarray  # (m, n); 0/1 here since tokens are deduplicated
    scaled: np.ndarray  # counts * df, broadcast over rows


def build_matrix(docs: Sequence[TokenDoc]) -> tuple[WordReviewMatrix, DfTable]:
    """Build the count matrix and df table over `docs`.

    Rows follow input document order; columns are the sorted vocabulary union.
    Upstream deduplication makes every count 0 or 1, which is asserted rather
    than assumed.
    """
    if not docs:
        raise FormatError("cannot build a matrix from zero documents")
    vocab = sorted({w for d in docs for w in d.tokens})
    if not vocab:
        raise FormatError("cannot build a matrix from an empty vocabulary")
    col = {w: j for j, w in enumerate(vocab)}
    counts = np.zeros((len(docs), len(vocab)), dtype=float)
    for i, doc in enumerate(docs):
        for word in doc.tokens:
            counts[i, col[word]] += 1.0
    assert counts.max(initial=0.0) <= 1.0, "token documents must be deduplicated"
    occurrence = counts.sum(axis=0).astype(int)
    df = DfTable(
        vocab=tuple(vocab),
        occurrence=tuple(int(c) for c in occurrence),
        df=tuple(float(x) for x in np.log1p(occurrence)),
    )
    matrix = WordReviewMatrix(
        doc_ids=tuple(d.doc_id for d in docs),
        vocab=tuple(vocab),
        counts=counts,
        scaled=counts * np.asarray(df.df),
    )
    return matrix, df


@dataclass(eq=False)
class ReducedDataSet:
    """PCA projection of the scaled matrix rows."""

    doc_ids: tuple[str, ...]
    points: np.ndarray  # (m, r)
    components: np.ndarray  # (r, n), orthonormal rows
    mean: np.ndarray  # (n,)
    explained_variance: tuple[float, ...]  # fraction of total variance, non-increasing


def pca_reduce(
    matrix: WordReviewMatrix | np.ndarray,
    r: int | None = None,
    variance: float = 0.95,
    doc_ids: Sequence[str] | None = None,
) -> ReducedDataSet:
    """Project rows onto their top principal components.

    Either a fixed component count `r` or a cumulative explained-variance
    target picks the dimensionality. An out-of-range `r` is clamped into
    [1, min(m, n)] with a warning; zero-variance data yields a single all-zero
    component with a warning.
    """
    if isinstance(matrix, WordReviewMatrix):
        data = matrix.scaled
        ids = matrix.doc_ids
    else:
        data = np.asarray(matrix, dtype=float)
        ids = tuple(doc_ids) if doc_ids is not None else tuple(
            str(i) for i in range(data.shape[0])
        )
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] == 0:
        raise FormatError("PCA input must be a 2-D matrix with at least two rows")
    m, n = data.shape
    mean = data.mean(axis=0)
    centered = data - mean
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = s[0] * max(m, n) * np.finfo(float).eps if s.size else 0.0
    if s.size == 0 or s[0] <= tol:
        log.warning("zero-variance data: emitting a single all-zero component")
        return ReducedDataSet(
            doc_ids=ids,
            points=np.zeros((m, 1)),
            components=np.zeros((1, n)),
            mean=mean,
            explained_variance=(0.0,),
        )
    total = float(np.sum(s**2))
    ratios = (s**2) / total
    max_r = min(m, n)
    if r is not None:
        if r < 1 or r > max_r:
            clamped = min(max(r, 1), max_r)
            log.warning("component count %d out of range, clamped to %d", r, clamped)
            r = clamped
    else:
        if not 0 < variance <= 1:
            raise FormatError(f"variance target must be in (0, 1], got {variance}")
        cum = np.cumsum(ratios)
        r = int(np.searchsorted(cum, variance - 1e-12) + 1)
        r = min(r, max_r)
    return ReducedDataSet(
        doc_ids=ids,
        points=u[:, :r] * s[:r],
        components=vt[:r].copy(),
        mean=mean,
        explained_variance=tuple(float(x) for x in ratios[:r]),
    )


def project(reduced: ReducedDataSet, rows: np.ndarray) -> np.ndarray:
    """Map new rows from word space into the reduced space."""
    return (np.asarray(rows, dtype=float) - reduced.mean) @ reduced.components.T


def reconstruct(reduced: ReducedDataSet) -> np.ndarray:
    """Map projected points back into the original word space."""
    return reduced.points @ reduced.components + reduced.mean


def write_matrix_csv(matrix: WordReviewMatrix, path) -> None:
    """Dump the scaled matrix as CSV with a doc_id column and word headers."""
    lines = ["doc_id," + ",".join(matrix.vocab)]
    for i, doc_id in enumerate(matrix.doc_ids):
        cells = ",".join(f"{v:.10g}" for v in matrix.scaled[i])
        lines.append(f"{doc_id},{cells}")
    atomic_write_text(path, "\n".join(lines) + "\n")
