"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from revloc.reviews import Category
from revloc.textproc import TextNormalizer, TokenDoc


def utc(year, month, day, hour=0, minute=0) -> datetime:
    return datetime(year, month, day, hour, minute, tzinfo=timezone.utc)


def make_doc(doc_id: str, tokens, category=Category.UNLABELED, timestamp=None) -> TokenDoc:
    review_id, _, seq = doc_id.partition(":")
    return TokenDoc(
        doc_id=doc_id,
        tokens=tuple(tokens),
        category=category,
        review_id=review_id or doc_id,
        seq=int(seq) if seq else 0,
        text=" ".join(tokens),
        timestamp=timestamp,
    )


def make_docs(token_lists, prefix="d", **kwargs) -> list[TokenDoc]:
    return [make_doc(f"{prefix}{i}:0", toks, **kwargs) for i, toks in enumerate(token_lists)]


@pytest.fixture
def plain_normalizer() -> TextNormalizer:
    """A normalizer with no lemma table, no stopwords, and no shorthand."""
    return TextNormalizer(lemmas={}, stopwords=frozenset(), acronyms=None)
