"""Text normalization: noise stripping, lemmatization, stopword removal."""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ConfigError
from .reviews import Category
from .segmentation import AtomicSentence

log = logging.getLogger(__name__)

_SYMBOLS = re.compile(r"[^a-zA-Z0-9\s]+")
_STRING_TAG = re.compile(r"<string\b[^>]*>(.*?)</string>", re.DOTALL | re.IGNORECASE)


def strip_noise(text: str) -> str:
    """Lowercase `text`, turning punctuation into spaces and dropping symbols.

    Punctuation (Unicode P categories) becomes a space so that "a.b" keeps a
    word boundary; remaining non-alphanumerics (math symbols, emoji) are
    removed outright; whitespace is collapsed to single spaces.
    """
    chars = [" " if unicodedata.category(c).startswith("P") else c for c in text]
    cleaned = _SYMBOLS.sub("", "".join(chars))
    return " ".join(cleaned.lower().split())


@dataclass(frozen=True)
class TokenDoc:
    """A normalized document: the token bag for one atomic sentence."""

    doc_id: str
    tokens: tuple[str, ...]
    category: Category = Category.UNLABELED
    review_id: str = ""
    seq: int = 0
    text: str = ""
    timestamp: datetime | None = None


def _read_text(path: str | Path | None, default_name: str) -> str:
    """Read a config file, falling back to the packaged default for None."""
    if path is None:
        source = resources.files("revloc") / "data" / default_name
    else:
        source = Path(path)
    try:
        return source.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read resource {source}: {exc}") from exc


def _data_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append((lineno, line))
    return out


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword list, one word per line."""
    text = _read_text(path, "stopwords_en.txt")
    return frozenset(line.lower() for _, line in _data_lines(text))


def load_lemmas(path: str | Path | None = None) -> dict[str, str]:
    """Load the inflected-form to lemma table (two tab-separated columns)."""
    text = _read_text(path, "lemmas_en.tsv")
    lemmas: dict[str, str] = {}
    for lineno, line in _data_lines(text):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ConfigError(f"malformed lemma entry at line {lineno}: {line!r}")
        lemmas[parts[0].lower()] = parts[1].lower()
    return lemmas


def load_acronyms(path: str | Path | None = None) -> dict[str, tuple[str, ...]]:
    """Load the shorthand expansion table (shorthand TAB expansion)."""
    text = _read_text(path, "acronyms_en.tsv")
    table: dict[str, tuple[str, ...]] = {}
    for lineno, line in _data_lines(text):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ConfigError(f"malformed acronym entry at line {lineno}: {line!r}")
        words = tuple(strip_noise(parts[1]).split())
        if words:
            table[parts[0].lower()] = words
    return table


def strings_whitelist(xml_text: str) -> frozenset[str]:
    """Collect words from <string>...</string> literals in a UI resource file.

    Words that appear in user-visible interface strings are domain vocabulary
    and must survive stopword removal even when the base list contains them.
    """
    words: set[str] = set()
    for match in _STRING_TAG.finditer(xml_text):
        words.update(strip_noise(match.group(1)).split())
    return frozenset(words)


def customize_stopwords(
    stopwords: frozenset[str], whitelist: frozenset[str]
) -> frozenset[str]:
    """Remove whitelisted interface words from the stopword list."""
    kept = frozenset(stopwords) - frozenset(whitelist)
    removed = len(stopwords) - len(kept)
    if removed:
        log.info("stopword list reduced by %d whitelisted words", removed)
    return kept


def normalize_tokens(
    text: str,
    lemmas: Mapping[str, str],
    stopwords: frozenset[str],
    acronyms: Mapping[str, tuple[str, ...]] | None = None,
) -> list[str]:
    """Turn raw text into an ordered, deduplicated token list.

    Pipeline: noise strip, shorthand expansion, lemma lookup (identity when a
    word is absent from the table), stopword removal, then first-occurrence
    deduplication.
    """
    words = strip_noise(text).split()
    if acronyms:
        expanded: list[str] = []
        for word in words:
            expanded.extend(acronyms.get(word, (word,)))
        words = expanded
    out: list[str] = []
    seen: set[str] = set()
    for word in words:
        lemma = lemmas.get(word, word)
        if lemma in stopwords or lemma in seen:
            continue
        seen.add(lemma)
        out.append(lemma)
    return out


@dataclass(frozen=True)
class TextNormalizer:
    """Bundles the lemma table, stopword list, and shorthand expansions."""

    lemmas: Mapping[str, str] = field(default_factory=dict)
    stopwords: frozenset[str] = frozenset()
    acronyms: Mapping[str, tuple[str, ...]] | None = None

    @classmethod
    def from_files(
        cls,
        lemma_path: str | Path | None = None,
        stopword_path: str | Path | None = None,
        acronym_path: str | Path | None = None,
        strings_xml: str | Path | None = None,
    ) -> "TextNormalizer":
        stopwords = load_stopwords(stopword_path)
        if strings_xml is not None:
            try:
                xml_text = Path(strings_xml).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read resource {strings_xml}: {exc}") from exc
            stopwords = customize_stopwords(stopwords, strings_whitelist(xml_text))
        return cls(load_lemmas(lemma_path), stopwords, load_acronyms(acronym_path))

    def tokens(self, text: str) -> list[str]:
        return normalize_tokens(text, self.lemmas, self.stopwords, self.acronyms)


def to_token_docs(
    sentences: list[AtomicSentence],
    normalizer: TextNormalizer,
    timestamps: Mapping[str, datetime | None] | None = None,
) -> list[TokenDoc]:
    """Normalize atomic sentences into token documents (may be empty docs)."""
    docs = []
    for sent in sentences:
        stamp = timestamps.get(sent.review_id) if timestamps else None
        docs.append(
            TokenDoc(
                doc_id=f"{sent.review_id}:{sent.seq}",
                tokens=tuple(normalizer.tokens(sent.text)),
                category=sent.category,
                review_id=sent.review_id,
                seq=sent.seq,
                text=sent.text,
                timestamp=stamp,
            )
        )
    return docs


def drop_short(docs: list[TokenDoc], min_tokens: int = 2) -> list[TokenDoc]:
    """Discard documents with fewer than `min_tokens` distinct tokens."""
    kept = [d for d in docs if len(d.tokens) >= min_tokens]
    dropped = len(docs) - len(kept)
    if dropped:
        log.info("dropped %d documents shorter than %d tokens", dropped, min_tokens)
    return kept
