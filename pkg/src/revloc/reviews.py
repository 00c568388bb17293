"""Load raw app-review dumps and keep the evolution-relevant ones.

Reviews arrive as JSON-Lines, one object per line:

    {"id": str, "app_id": str, "text": str,
     "timestamp": RFC-3339 str | null,
     "category": "feature_request" | "problem_discovery" |
                 "information_giving" | "information_seeking" | null}

Only feature requests and problem discoveries feed the rest of the
pipeline; the other categories are descriptive chatter.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple

from .errors import FormatError

log = logging.getLogger(__name__)


class Category(enum.Enum):
    INFORMATION_GIVING = "information_giving"
    INFORMATION_SEEKING = "information_seeking"
    FEATURE_REQUEST = "feature_request"
    PROBLEM_DISCOVERY = "problem_discovery"
    UNLABELED = "unlabeled"


#: Categories that describe work the app's developers could act on.
INFORMATIVE = frozenset({Category.FEATURE_REQUEST, Category.PROBLEM_DISCOVERY})


@dataclass(frozen=True)
class Review:
    id: str
    app_id: str
    text: str
    timestamp: datetime | None = None
    category: Category = Category.UNLABELED


@dataclass(frozen=True)
class CueConfig:
    """Keyword cues for the fallback classifier; all matched case-insensitively."""

    request_cues: tuple[str, ...] = (
        "wish", "add", "would be nice", "please", "should", "want",
    )
    problem_cues: tuple[str, ...] = (
        "crash", "bug", "error", "doesn't work", "fails", "freez",
    )


class LoadedReviews(NamedTuple):
    reviews: list[Review]
    skipped: int


class FilteredReviews(NamedTuple):
    reviews: list[Review]
    unlabeled_dropped: int


def parse_instant(value: str) -> datetime:
    """Parse an RFC-3339 timestamp, tolerating a trailing 'Z'.

    Zone-less stamps are taken as UTC so every parsed instant is comparable
    with every other.
    """
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    parsed = datetime.fromisoformat(value)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


def _parse_review(obj: dict) -> Review:
    rid = obj["id"]
    app_id = obj["app_id"]
    text = obj["text"]
    if not isinstance(rid, str) or not isinstance(app_id, str) or not isinstance(text, str):
        raise ValueError("id, app_id and text must be strings")
    if not text.strip():
        raise ValueError("empty review text")
    raw_ts = obj.get("timestamp")
    ts = parse_instant(raw_ts) if raw_ts is not None else None
    raw_cat = obj.get("category")
    cat = Category(raw_cat) if raw_cat is not None else Category.UNLABELED
    return Review(id=rid, app_id=app_id, text=text, timestamp=ts, category=cat)


def load_reviews(path: str | Path) -> LoadedReviews:
    """Read a JSON-Lines review dump.

    Malformed lines (bad JSON, missing fields, empty text, invalid
    timestamp, duplicate id) are skipped and counted, not fatal.
    Raises FormatError when the file yields no usable record at all.
    """
    path = Path(path)
    reviews: list[Review] = []
    seen_ids: set[str] = set()
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                review = _parse_review(json.loads(line))
                if review.id in seen_ids:
                    raise ValueError(f"duplicate review id {review.id!r}")
            except (ValueError, KeyError, TypeError) as exc:
                skipped += 1
                log.warning("%s:%d: skipping malformed review: %s", path, lineno, exc)
                continue
            seen_ids.add(review.id)
            reviews.append(review)
    if not reviews:
        raise FormatError(f"{path}: no parseable review records")
    if skipped:
        log.warning("%s: skipped %d malformed line(s)", path, skipped)
    return LoadedReviews(reviews, skipped)


def heuristic_classify(review: Review, cues: CueConfig | None = None) -> Review:
    """Assign a category to an unlabeled review from keyword cues.

    Request cues win ties: requests are rarer and more actionable than
    problem reports. Reviews matching neither cue list are treated as
    information giving. Never returns an unlabeled review.
    """
    cues = cues or CueConfig()
    text = review.text.lower()
    if any(cue in text for cue in cues.request_cues):
        return replace(review, category=Category.FEATURE_REQUEST)
    if any(cue in text for cue in cues.problem_cues):
        return replace(review, category=Category.PROBLEM_DISCOVERY)
    return replace(review, category=Category.INFORMATION_GIVING)


def filter_informative(
    reviews: list[Review],
    classify_fallback: bool = False,
    cues: CueConfig | None = None,
) -> FilteredReviews:
    """Keep feature requests and problem discoveries, preserving order.

    Unlabeled reviews go through heuristic_classify first when
    classify_fallback is set; otherwise they are dropped and counted.
    """
    kept: list[Review] = []
    unlabeled_dropped = 0
    for review in reviews:
        if review.category is Category.UNLABELED:
            if classify_fallback:
                review = heuristic_classify(review, cues)
            else:
                unlabeled_dropped += 1
                continue
        if review.category in INFORMATIVE:
            kept.append(review)
    if unlabeled_dropped:
        log.warning("dropped %d unlabeled review(s); fallback classifier is off",
                    unlabeled_dropped)
    return FilteredReviews(kept, unlabeled_dropped)
