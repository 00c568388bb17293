"""Split reviews into single-concern atomic sentences.

Composite review sentences get broken up lexically: an adversative
conjunction ("but", "yet", ...) truncates everything before it, since
the contrastive part carries the operative complaint or request; a
copulative conjunction ("and", "as well as", ...) either separates two
clauses or distributes a shared sentence stem over two conjoined
phrases. Runs before any token normalization, which would destroy the
surface cues this module relies on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .reviews import Category, Review

_DEFAULT_VERBS = frozenset("""
    am is are was were be been being do does did done have has had having
    can could will would shall should may might must need needs needed
    wish want wants like love hate prefer use get got make makes made work
    go goes went see say said think know keep lacks lack let put take come
    help try run open close show turn broke break stop stopped support
""".split())

_DETERMINERS = frozenset("""
    a an the my your his her its our their this that these those some any
    no each every another more most
""".split())

_PREPOSITIONS = frozenset("""
    for in on at to from of with without about into onto over under after
    before during between via towards
""".split())


@dataclass(frozen=True)
class SegmenterConfig:
    copulative: tuple[str, ...] = ("and", "as well as", "moreover", "plus")
    adversative: tuple[str, ...] = ("but", "yet", "however")
    verbs: frozenset[str] = _DEFAULT_VERBS
    determiners: frozenset[str] = _DETERMINERS
    prepositions: frozenset[str] = _PREPOSITIONS


@dataclass(frozen=True)
class AtomicSentence:
    review_id: str
    seq: int
    text: str
    category: Category


# A '.' splits sentences unless it belongs to an ellipsis run; '!', '?'
# and ';' always split.
_TERMINATOR = re.compile(r"(?<!\.)\.(?!\.)|[!?;]+")


def split_sentences(review: Review) -> list[str]:
    """Break review text into raw sentences, dropping empty fragments."""
    parts = _TERMINATOR.split(review.text)
    return [p.strip() for p in parts if p and p.strip()]


def _clean_token(token: str) -> str:
    return token.strip(".,;:!?\"'()[]").lower()


def _verb_like(token: str, config: SegmenterConfig) -> bool:
    t = _clean_token(token)
    if t in config.verbs:
        return True
    if len(t) >= 4 and t.endswith("ed"):
        return True
    if len(t) >= 5 and t.endswith("ing"):
        return True
    # shallow 3rd-person-singular cue; plural nouns slip through, which a
    # lexical segmenter has to live with
    if len(t) >= 4 and t.endswith("s") and not t.endswith(("ss", "us", "is")):
        return True
    return False


def _has_clause(tokens: Sequence[str], config: SegmenterConfig) -> bool:
    return len(tokens) >= 2 and any(_verb_like(t, config) for t in tokens)


def _join(*token_groups: Sequence[str]) -> str:
    text = " ".join(t for group in token_groups for t in group)
    return text.strip(" ,;:").strip()


def _find_conjunction(tokens: Sequence[str], conjunctions: tuple[str, ...]):
    """Yield (index, word_count) for every conjunction occurrence, leftmost first."""
    cleaned = [_clean_token(t) for t in tokens]
    split_conjs = sorted((c.lower().split() for c in conjunctions), key=len, reverse=True)
    i = 0
    while i < len(cleaned):
        for conj in split_conjs:
            if cleaned[i : i + len(conj)] == conj:
                yield i, len(conj)
                i += len(conj) - 1
                break
        i += 1


def _truncate_adversative(sentence: str, config: SegmenterConfig) -> str:
    """Keep only the text after the last adversative conjunction."""
    if not config.adversative:
        return sentence
    pattern = re.compile(
        r"\b(?:" + "|".join(re.escape(a) for a in config.adversative) + r")\b",
        re.IGNORECASE,
    )
    last = None
    for match in pattern.finditer(sentence):
        last = match
    if last is None:
        return sentence
    rest = sentence[last.end():].strip(" ,;:").strip()
    if rest:
        return rest
    # conjunction dangling at the end: nothing contrastive follows, so keep
    # the part before it instead of emitting an empty sentence
    before = sentence[:last.start()].strip(" ,;:").strip()
    return _truncate_adversative(before, config) if before else sentence


def _split_copulative(tokens: list[str], config: SegmenterConfig) -> list[list[str]] | None:
    """Split at the first usable copulative occurrence, or None if there is none."""
    for idx, width in _find_conjunction(tokens, config.copulative):
        left = tokens[:idx]
        right = tokens[idx + width:]
        if not left or not right:
            continue
        if _has_clause(left, config) and _has_clause(right, config):
            return [left, right]
        # Phrase join: distribute the stem before the first conjunct and the
        # trailing prepositional phrase after the second one over both parts.
        det_at = max(
            (i for i, t in enumerate(left) if _clean_token(t) in config.determiners),
            default=None,
        )
        if det_at is not None:
            stem, first = left[:det_at], left[det_at:]
        else:
            stem, first = left[:-1], left[-1:]
        prep_at = next(
            (i for i, t in enumerate(right) if i >= 1 and _clean_token(t) in config.prepositions),
            None,
        )
        if prep_at is not None:
            second, tail = right[:prep_at], right[prep_at:]
        else:
            second, tail = right, []
        return [list(stem) + list(first) + list(tail),
                list(stem) + list(second) + list(tail)]
    return None


def segment_atomic(sentence: str, config: SegmenterConfig | None = None) -> list[str]:
    """Reduce one raw sentence to its atomic, single-concern parts.

    Adversative truncation runs first, then copulative splitting recurses
    until nothing applies; every returned string is a fixed point of this
    function. A sentence without conjunctions comes back unchanged.
    """
    config = config or SegmenterConfig()
    sentence = sentence.strip()
    if not sentence:
        return []
    sentence = _truncate_adversative(sentence, config)
    split = _split_copulative(sentence.split(), config)
    if split is None:
        return [_join(sentence.split())]
    out: list[str] = []
    for part in split:
        out.extend(segment_atomic(_join(part), config))
    return out


def segment_review(review: Review, config: SegmenterConfig | None = None) -> list[AtomicSentence]:
    """Segment a whole review, numbering atomic sentences in source order."""
    out = []
    for sentence in split_sentences(review):
        for text in segment_atomic(sentence, config):
            out.append(AtomicSentence(
                review_id=review.id,
                seq=len(out),
                text=text,
                category=review.category,
            ))
    return out
