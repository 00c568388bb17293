"""Commit mining, file tagging, and review-to-file similarity ranking."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import FormatError
from .reviews import parse_instant
from .textproc import TextNormalizer, TokenDoc
from .vsm import DfTable

log = logging.getLogger(__name__)

#: Suffixes of files that document or decorate rather than implement.
NON_SOURCE_SUFFIXES = (".html", ".properties", ".md", ".txt", ".png")

_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z0-9])|[A-Z]?[a-z0-9]+|[A-Z]+")
_DOC_COMMENT = re.compile(r"/\*\*(.*?)\*/", re.DOTALL)
_METHOD_DECL = re.compile(r"\b([A-Za-z_]\w*)\s*\([^;()]*\)\s*\{")
_FIELD_DECL = re.compile(r"\b[A-Za-z_][\w<>\[\],]*\s+([A-Za-z_]\w*)\s*[=;]")
_NOT_IDENTIFIERS = frozenset(
    "if for while switch catch return new do else try finally synchronized "
    "super this class interface enum import package throw break continue".split()
)

#: Marker: derive the review time from the TokenDoc's own timestamp.
USE_DOC_TIME = object()


@dataclass(frozen=True)
class CommitRecord:
    """One change-history entry: message text plus the source files it touched."""

    sha: str
    title: str
    description: str
    timestamp: datetime
    files: tuple[str, ...]


class LoadedCommits(NamedTuple):
    commits: list[CommitRecord]
    skipped: int  # malformed lines
    dropped: int  # commits left with no source files


class CommitEntry(NamedTuple):
    timestamp: datetime
    words: dict  # word -> count


@dataclass(frozen=True)
class FilePair:
    """A source file's two word profiles: its code text and its commit messages.

    Bags keep counts for diagnostics; similarity scoring uses the word sets.
    """

    path: str
    code_words: dict  # word -> count
    commit_entries: tuple[CommitEntry, ...]  # sorted by timestamp ascending


class TaggedFiles(NamedTuple):
    pairs: list[FilePair]
    missing: int  # commit paths absent from the source tree


@dataclass(frozen=True)
class LocalizationRanking:
    """Files ranked by predicted relevance to one review."""

    review_id: str
    entries: tuple[tuple[str, float], ...]  # (path, score), best first
    gamma: int  # commit-word overlap of the top-ranked file
    review_len: int  # distinct review words


def is_source_path(path: str, suffixes: tuple[str, ...] = NON_SOURCE_SUFFIXES) -> bool:
    """True unless the path carries a documentation or asset suffix."""
    return not path.lower().endswith(tuple(s.lower() for s in suffixes))


def load_commits(
    path: str | Path, non_source_suffixes: tuple[str, ...] = NON_SOURCE_SUFFIXES
) -> LoadedCommits:
    """Read commit records from a JSON-lines dump.

    Each row needs a sha, a title, an RFC 3339 timestamp, and a list of file
    paths; description is optional. Non-source paths are removed from each
    record, and commits left with no files at all are dropped (counted).
    Malformed lines are skipped with a count; an empty dump is not an error.
    """
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read commits file {path}: {exc}") from exc
    commits: list[CommitRecord] = []
    skipped = 0
    dropped = 0
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
            if not isinstance(row, dict):
                raise ValueError("row is not an object")
            sha = row.get("sha")
            title = row.get("title")
            files = row.get("files")
            stamp = row.get("timestamp")
            if not isinstance(sha, str) or not sha:
                raise ValueError("missing sha")
            if not isinstance(title, str) or not title.strip():
                raise ValueError("missing title")
            if not isinstance(stamp, str):
                raise ValueError("missing timestamp")
            if not isinstance(files, list) or not all(
                isinstance(f, str) and f for f in files
            ):
                raise ValueError("files must be a list of paths")
            description = row.get("description", "")
            if not isinstance(description, str):
                raise ValueError("description must be a string")
            parsed = parse_instant(stamp)
        except (ValueError, TypeError) as exc:
            skipped += 1
            log.warning("skipping commit line %d: %s", lineno, exc)
            continue
        source_files = tuple(f for f in files if is_source_path(f, non_source_suffixes))
        if not source_files:
            dropped += 1
            continue
        commits.append(
            CommitRecord(
                sha=sha,
                title=title.strip(),
                description=description,
                timestamp=parsed,
                files=source_files,
            )
        )
    if skipped:
        log.warning("skipped %d malformed commit lines", skipped)
    if dropped:
        log.info("dropped %d commits touching no source files", dropped)
    return LoadedCommits(commits, skipped, dropped)


def split_identifier(name: str) -> list[str]:
    """Break an identifier on underscores and camel-case humps."""
    parts: list[str] = []
    for chunk in name.split("_"):
        parts.extend(_CAMEL.findall(chunk))
    return parts


def path_words(path: str) -> list[str]:
    """Tokenize a file path: every directory segment plus the file stem."""
    p = Path(path)
    words: list[str] = []
    for segment in p.parts[:-1]:
        words.extend(split_identifier(segment))
    words.extend(split_identifier(p.stem))
    return words


def extract_code_doc(path: str, text: str | None, normalizer: TextNormalizer) -> dict:
    """Collect a file's descriptive word bag from its path and source text.

    Extraction pieces: path segments, documentation comments, method names at
    declaration sites, and field identifiers. Compound names are split, each
    piece runs through the shared normalizer, and counts accumulate per piece
    so the bag reflects how many extraction sites mention a word.
    """
    pieces: list[str] = [" ".join(path_words(path))]
    if text:
        for comment in _DOC_COMMENT.findall(text):
            pieces.append(re.sub(r"@\w+", " ", comment).replace("*", " "))
        stripped = _DOC_COMMENT.sub(" ", text)
        for name in _METHOD_DECL.findall(stripped):
            if name not in _NOT_IDENTIFIERS:
                pieces.append(" ".join(split_identifier(name)))
        for name in _FIELD_DECL.findall(stripped):
            if name not in _NOT_IDENTIFIERS:
                pieces.append(" ".join(split_identifier(name)))
    bag: Counter = Counter()
    for piece in pieces:
        bag.update(normalizer.tokens(piece))
    return dict(bag)


def _commit_words(commit: CommitRecord, normalizer: TextNormalizer) -> dict:
    tokens = normalizer.tokens(f"{commit.title} {commit.description}")
    return dict(Counter(tokens))


def tag_files(
    commits: Sequence[CommitRecord],
    tree: str | Path | None,
    normalizer: TextNormalizer,
) -> TaggedFiles:
    """Pair every source file with its code bag and commit message entries.

    Paths named by commits but absent from the tree stay rankable with path
    words only, and their number is reported. Tree files never touched by a
    commit get empty commit entries (cold-start files).
    """
    commit_map: dict[str, list[CommitEntry]] = {}
    for commit in commits:
        entry = CommitEntry(commit.timestamp, _commit_words(commit, normalizer))
        for file_path in commit.files:
            commit_map.setdefault(file_path, []).append(entry)

    tree_files: dict[str, str | None] = {}
    if tree is not None:
        base = Path(tree)
        if not base.is_dir():
            raise FormatError(f"source tree root is not a directory: {tree}")
        for item in sorted(base.rglob("*")):
            rel = item.relative_to(base).as_posix()
            if item.is_file() and not any(part.startswith(".") for part in item.parts):
                if not is_source_path(rel):
                    continue
                try:
                    tree_files[rel] = item.read_text(encoding="utf-8", errors="replace")
                except OSError as exc:
                    log.warning("cannot read %s (%s); using path words only", rel, exc)
                    tree_files[rel] = None

    pairs: list[FilePair] = []
    missing = 0
    for path in sorted(set(tree_files) | set(commit_map)):
        entries = tuple(
            sorted(commit_map.get(path, ()), key=lambda e: (e.timestamp, sorted(e.words)))
        )
        if path in tree_files:
            code = extract_code_doc(path, tree_files[path], normalizer)
        else:
            missing += 1
            code = extract_code_doc(path, None, normalizer)
        pairs.append(FilePair(path=path, code_words=code, commit_entries=entries))
    if missing:
        log.warning("%d commit paths are absent from the source tree", missing)
    return TaggedFiles(pairs, missing)


def build_df(
    review_docs: Iterable[Iterable[str]], pairs: Sequence[FilePair]
) -> DfTable:
    """Document-frequency table over reviews, code docs, and commit docs."""
    corpus: list[Iterable[str]] = [list(doc) for doc in review_docs]
    for pair in pairs:
        corpus.append(pair.code_words.keys())
        for entry in pair.commit_entries:
            corpus.append(entry.words.keys())
    return DfTable.from_docs(corpus)


def dice_sim(review_words: Iterable[str], doc_words: Iterable[str], df: DfTable) -> float:
    """Weighted word-set overlap, normalized by the lighter side.

    Each word contributes its df weight; words the table does not cover weigh
    0 and are reported. Zero when either side has no weight, so empty or
    unknown-vocabulary docs never divide by zero.
    """
    set_a, set_b = set(review_words), set(doc_words)
    unknown = [w for w in set_a | set_b if df.weight(w) == 0.0]
    if unknown:
        log.debug("%d words have no df weight: %s", len(unknown), sorted(unknown)[:5])
    weight_a = sum(df.weight(w) for w in set_a)
    weight_b = sum(df.weight(w) for w in set_b)
    if weight_a <= 0 or weight_b <= 0:
        return 0.0
    shared = sum(df.weight(w) for w in set_a & set_b)
    return shared / min(weight_a, weight_b)


def _review_words(review: TokenDoc | Sequence[str]) -> list[str]:
    return list(review.tokens) if isinstance(review, TokenDoc) else list(review)


def interpolated_sim(
    review: TokenDoc | Sequence[str],
    file: FilePair,
    review_time: datetime | None,
    df: DfTable,
) -> tuple[float, int, int]:
    """Blend code and commit similarity by the review's commit-word overlap.

    The commit bag is the union of the file's commit entries strictly earlier
    than `review_time` (all of them when it is None). With L distinct review
    words of which gamma appear in that bag, the score is
    ((L - gamma)/L) * dice(review, code) + (gamma/L) * dice(review, commits),
    so files with no usable history fall back to pure code similarity.
    Returns (score, gamma, L).
    """
    words = _review_words(review)
    review_set = set(words)
    L = len(review_set)
    if L == 0:
        return 0.0, 0, 0
    commit_bag: set[str] = set()
    for entry in file.commit_entries:
        if review_time is None or entry.timestamp < review_time:
            commit_bag.update(entry.words)
    gamma = len(review_set & commit_bag)
    sim_code = dice_sim(review_set, file.code_words.keys(), df)
    sim_commit = dice_sim(review_set, commit_bag, df)
    score = ((L - gamma) / L) * sim_code + (gamma / L) * sim_commit
    return score, gamma, L


def rank_files(
    review: TokenDoc | Sequence[str],
    files: Sequence[FilePair],
    df: DfTable,
    top_k: int | None = None,
    review_time=USE_DOC_TIME,
) -> LocalizationRanking:
    """Rank candidate files for one review, best match first.

    Ties in score break toward the lexicographically smaller path, and the
    list is truncated to `top_k` entries when given. `review_time` defaults
    to the review's own timestamp; pass None to disable the history cutoff.
    The reported gamma reflects the top-ranked file.
    """
    if not files:
        raise FormatError("cannot rank an empty file list")
    if review_time is USE_DOC_TIME:
        review_time = review.timestamp if isinstance(review, TokenDoc) else None
    scored: list[tuple[str, float, int, int]] = []
    for pair in files:
        score, gamma, length = interpolated_sim(review, pair, review_time, df)
        scored.append((pair.path, score, gamma, length))
    scored.sort(key=lambda item: (-item[1], item[0]))
    if top_k is not None and top_k >= 1:
        kept = scored[:top_k]
    else:
        kept = scored
    review_id = review.doc_id if isinstance(review, TokenDoc) else ""
    return LocalizationRanking(
        review_id=review_id,
        entries=tuple((path, score) for path, score, _, _ in kept),
        gamma=kept[0][2],
        review_len=kept[0][3],
    )
