"""Text analytics over raw log messages: tokenization, word counts, TF-IDF.

Each stored (coalesced) message counts once; a message is a document for
TF-IDF unless node-hour pooling is requested. IDF is ln(N / df) without
smoothing, so a term present in every document scores exactly zero.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..errors import ArgumentError, InsufficientDataError
from ..model import Context, format_node_id

DEFAULT_STOPWORDS = frozenset(
    """a an and are as at be been by for from had has have in is it its no not
    of on or that the this to was were will with""".split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_NUMBER_RE = re.compile(r"^\d+$")
_HEX_RE = re.compile(r"^(0x)?[0-9a-f]+$")


@dataclass(frozen=True)
class TokenFilters:
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    whitelist: frozenset[str] = frozenset()


DEFAULT_FILTERS = TokenFilters()


def tokenize(message: str, filters: TokenFilters = DEFAULT_FILTERS) -> list[str]:
    """Lowercase, split on non-alphanumeric boundaries, drop noise tokens.

    Dropped unless whitelisted: pure numbers, 0x-prefixed hex literals, and
    bare hex strings containing at least one digit (so "cafe" survives but
    "9c000400" does not). Stopwords are removed last.
    """
    out = []
    for token in _TOKEN_RE.findall(message.lower()):
        if token in filters.whitelist:
            out.append(token)
            continue
        if token in filters.stopwords:
            continue
        if _NUMBER_RE.match(token):
            continue
        if _HEX_RE.match(token) and any(c.isdigit() for c in token):
            continue
        out.append(token)
    return out


@dataclass(frozen=True)
class TermEntry:
    term: str
    raw_count: int
    doc_frequency: int
    score: float = 0.0  # tf-idf aggregate; 0 for plain word counts


@dataclass
class TermStats:
    entries: list[TermEntry]
    total_docs: int
    total_tokens: int

    def top(self, n: int) -> list[TermEntry]:
        return self.entries[:n]

    def get(self, term: str) -> Optional[TermEntry]:
        for e in self.entries:
            if e.term == term:
                return e
        return None


def _documents(engine, ctx: Context, doc_unit: str, filters: TokenFilters) -> list[list[str]]:
    if doc_unit not in ("message", "node-hour"):
        raise ArgumentError("doc_unit must be 'message' or 'node-hour'")
    events = engine.events_for(ctx)
    if doc_unit == "message":
        return [tokenize(rec.raw_message, filters) for rec in events]
    pooled: dict[tuple[str, int], list[str]] = {}
    for rec in events:
        key = (format_node_id(rec.location), rec.hour)
        pooled.setdefault(key, []).extend(tokenize(rec.raw_message, filters))
    return [pooled[k] for k in sorted(pooled)]


def word_count(engine, ctx: Context, filters: TokenFilters = DEFAULT_FILTERS) -> TermStats:
    """Token counts over the raw messages matching a context, ranked by
    count descending then term ascending."""
    docs = _documents(engine, ctx, "message", filters)
    counts: dict[str, int] = {}
    doc_freq: dict[str, int] = {}
    total_tokens = 0
    for tokens in docs:
        total_tokens += len(tokens)
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for tok in set(tokens):
            doc_freq[tok] = doc_freq.get(tok, 0) + 1
    entries = [
        TermEntry(term, counts[term], doc_freq[term])
        for term in sorted(counts, key=lambda t: (-counts[t], t))
    ]
    return TermStats(entries, total_docs=len(docs), total_tokens=total_tokens)


def tf_idf(
    engine,
    ctx: Context,
    doc_unit: str = "message",
    smooth: bool = False,
    filters: TokenFilters = DEFAULT_FILTERS,
) -> TermStats:
    """TF-IDF with tf = raw in-document count and idf = ln(N / df).

    The per-term score reported is the maximum tf * idf over documents. With
    smooth=True the idf becomes ln(N / df) + 1 so single-document corpora
    still rank terms.
    """
    docs = _documents(engine, ctx, doc_unit, filters)
    if not docs:
        raise InsufficientDataError("tf-idf needs at least one document")
    n_docs = len(docs)
    doc_freq: dict[str, int] = {}
    raw_counts: dict[str, int] = {}
    total_tokens = 0
    per_doc_counts: list[dict[str, int]] = []
    for tokens in docs:
        total_tokens += len(tokens)
        tf: dict[str, int] = {}
        for tok in tokens:
            tf[tok] = tf.get(tok, 0) + 1
            raw_counts[tok] = raw_counts.get(tok, 0) + 1
        per_doc_counts.append(tf)
        for tok in tf:
            doc_freq[tok] = doc_freq.get(tok, 0) + 1

    idf = {
        term: math.log(n_docs / df) + (1.0 if smooth else 0.0)
        for term, df in doc_freq.items()
    }
    best: dict[str, float] = {term: 0.0 for term in raw_counts}
    for tf in per_doc_counts:
        for term, count in tf.items():
            score = count * idf[term]
            if score > best[term]:
                best[term] = score
    entries = [
        TermEntry(term, raw_counts[term], doc_freq[term], best[term])
        for term in sorted(raw_counts, key=lambda t: (-best[t], t))
    ]
    return TermStats(entries, total_docs=n_docs, total_tokens=total_tokens)
