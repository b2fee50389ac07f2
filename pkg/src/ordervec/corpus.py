"""Corpus preprocessing: cleaning, tokenization, vocabulary, id encoding.

The cleaning pipeline mirrors common wiki-dump preparation: strip markup
tags, drop punctuation, downcase, and normalize whitespace. Context windows
downstream never cross document boundaries, so the reader keeps documents
(file boundaries or blank lines) separate.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

# Tags never span lines: an unclosed '<' swallows the rest of its line only.
_TAG_RE = re.compile(r"<[^>\n]*>")
_UNCLOSED_TAG_RE = re.compile(r"<[^\n]*")
# Anything that is not a word character or whitespace counts as punctuation
# here (Unicode P* and S* plus stray marks/controls); '_' is word-class for
# the regex engine but is punctuation for us.
_NONWORD_RE = re.compile(r"[^\w\s]|_")


def clean_text(raw: str) -> str:
    """Clean one chunk of raw text down to lowercase space-separated tokens.

    Markup tags are dropped, punctuation becomes a space (so ``Hello,World``
    stays two words), letters are lowercased, and whitespace runs collapse to
    single spaces. Idempotent: cleaning cleaned text is a no-op.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _TAG_RE.sub(" ", text)
    text = _UNCLOSED_TAG_RE.sub(" ", text)
    text = text.lower()
    text = _NONWORD_RE.sub(" ", text)
    return " ".join(text.split())


def tokenize(cleaned: str) -> list[str]:
    """Split cleaned text on whitespace runs; never yields empty tokens."""
    return cleaned.split()


@dataclass
class Vocabulary:
    """Corpus vocabulary: words with counts, densely numbered 0..V-1.

    Entries are ordered by descending count, ties broken by ascending word,
    so the numbering is a deterministic function of the count multiset.
    """

    entries: list[tuple[str, int]]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {word: i for i, (word, _) in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def id(self, word: str) -> int:
        return self.index[word]

    def word(self, word_id: int) -> str:
        return self.entries[word_id][0]

    @property
    def words(self) -> list[str]:
        return [word for word, _ in self.entries]

    @classmethod
    def from_counts(cls, counts: dict[str, int], min_count: int = 1) -> "Vocabulary":
        if min_count < 1:
            raise ValueError(f"min_count must be >= 1, got {min_count}")
        kept = [(w, c) for w, c in counts.items() if c >= min_count]
        kept.sort(key=lambda wc: (-wc[1], wc[0]))
        return cls(kept)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Vocabulary":
        """Vocabulary shim for word lists recovered from artifact files,
        where corpus counts are no longer known (stored as 0)."""
        return cls([(w, 0) for w in words])

    def save(self, path: str | Path) -> None:
        from .util import atomic_write

        with atomic_write(path) as fh:
            for word, count in self.entries:
                fh.write(f"{word} {count}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'word count'")
                entries.append((parts[0], int(parts[1])))
        return cls(entries)


@dataclass
class EncodedCorpus:
    """Documents as dense id arrays; windows never cross array boundaries."""

    documents: list[np.ndarray]
    token_count: int

    def __len__(self) -> int:
        return len(self.documents)


def build_vocabulary(tokens: Iterable[str], min_count: int = 5) -> Vocabulary:
    """Count a token stream and keep words occurring at least ``min_count``
    times (default 5). An empty stream yields an empty vocabulary."""
    return Vocabulary.from_counts(Counter(tokens), min_count)


def encode(documents: Iterable[Sequence[str]], vocab: Vocabulary) -> EncodedCorpus:
    """Encode tokenized documents as id arrays.

    Out-of-vocabulary tokens are removed before any windowing, so the
    surviving neighbors become adjacent. Empty documents are kept; they
    simply contribute no windows.
    """
    index = vocab.index
    encoded = []
    total = 0
    for doc in documents:
        ids = [index[t] for t in doc if t in index]
        total += len(ids)
        encoded.append(np.asarray(ids, dtype=np.int32))
    return EncodedCorpus(encoded, total)


def iter_documents(paths: Sequence[str | Path]) -> Iterator[list[str]]:
    """Stream cleaned, tokenized documents from text files.

    A document ends at a blank input line or at end of file. Undecodable
    bytes are replaced, never fatal.
    """
    for path in paths:
        with open(path, encoding="utf-8", errors="replace") as fh:
            doc: list[str] = []
            for line in fh:
                if not line.strip():
                    if doc:
                        yield doc
                        doc = []
                    continue
                doc.extend(tokenize(clean_text(line)))
            if doc:
                yield doc


def load_corpus(
    paths: Sequence[str | Path], min_count: int = 5
) -> tuple[Vocabulary, EncodedCorpus]:
    """Read files twice: once to count the vocabulary, once to encode."""
    counts: Counter[str] = Counter()
    for doc in iter_documents(paths):
        counts.update(doc)
    vocab = Vocabulary.from_counts(counts, min_count)
    return vocab, encode(iter_documents(paths), vocab)
