"""Turn raw text or token-count tables into occupancy configurations.

Tokens play the role of urns: the estimators only consume the
count-of-count profile, so `to_occupancy` drops token identities and keeps
the multiset of counts.

Tokenization is deliberately minimal and versioned: tokens are maximal runs
of Unicode letters, case-folded; digits, punctuation and whitespace
separate.  No stemming or stop-word handling, since none of it changes the
count-of-count profile in a way the estimators could use.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field

from .errors import InputFormatError, InsufficientDataError
from .sampler import OccupancyCounts

__all__ = ["CorpusCounts", "tokenize_text", "load_counts", "to_occupancy",
           "write_corpus_csv", "TOKENIZER_VERSION"]

TOKENIZER_VERSION = "letters-casefold-1"

# maximal runs of Unicode letters: word characters minus digits/underscore
_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


@dataclass(frozen=True)
class CorpusCounts:
    """Token frequency table with provenance."""

    counts: dict
    total: int
    meta: dict = field(default_factory=dict)

    @property
    def vocabulary_size(self) -> int:
        return len(self.counts)


def tokenize_text(data, source: str = "<memory>") -> CorpusCounts:
    """Count tokens in UTF-8 text (str, or bytes that must decode cleanly).

    Invalid UTF-8 raises InputFormatError carrying the byte offset.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InputFormatError(
                f"invalid UTF-8 at byte offset {exc.start}", location=exc.start)
    elif isinstance(data, str):
        text = data
    else:
        raise InputFormatError(f"expected str or bytes, got {type(data).__name__}")
    counts: dict = {}
    total = 0
    for match in _TOKEN_RE.finditer(text):
        token = match.group().casefold()
        counts[token] = counts.get(token, 0) + 1
        total += 1
    return CorpusCounts(counts=counts, total=total,
                        meta={"source": source, "tokenizer": TOKENIZER_VERSION})


def tokenize_file(path) -> CorpusCounts:
    with open(path, "rb") as fh:
        return tokenize_text(fh.read(), source=str(path))


def load_counts(path) -> CorpusCounts:
    """Read a token count CSV with header ``token,count``.

    Duplicate tokens are summed with a warning; non-positive or non-integer
    counts are rejected with their line number.
    """
    counts: dict = {}
    total = 0
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["token", "count"]:
            raise InputFormatError("expected header 'token,count'", location=1)
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise InputFormatError(f"malformed row {row!r}", location=line_no)
            token = row[0]
            try:
                cnt = int(row[1])
            except ValueError as exc:
                raise InputFormatError(f"malformed count {row[1]!r}: {exc}",
                                       location=line_no)
            if cnt < 1:
                raise InputFormatError(f"count must be >= 1, got {cnt}", location=line_no)
            if token in counts:
                warnings.warn(f"duplicate token {token!r} at line {line_no}; counts summed")
            counts[token] = counts.get(token, 0) + cnt
            total += cnt
    return CorpusCounts(counts=counts, total=total, meta={"source": str(path)})


def write_corpus_csv(corpus: CorpusCounts, path) -> None:
    """CSV (token, count) sorted by descending count, then token."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["token", "count"])
        for token in sorted(corpus.counts, key=lambda t: (-corpus.counts[t], t)):
            writer.writerow([token, corpus.counts[token]])


def to_occupancy(corpus: CorpusCounts) -> OccupancyCounts:
    """Drop token identities, keep counts: tokens become urns 1..V ranked by
    descending count (ties broken by token), preserving the count-of-count
    profile exactly."""
    if corpus.total < 1:
        raise InsufficientDataError("empty corpus")
    ranked = sorted(corpus.counts, key=lambda t: (-corpus.counts[t], t))
    counts = {rank: corpus.counts[token] for rank, token in enumerate(ranked, start=1)}
    return OccupancyCounts(counts=counts, total=corpus.total, mode="fixed",
                           meta=dict(corpus.meta))
