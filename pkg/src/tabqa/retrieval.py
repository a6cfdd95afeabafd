"""Ranking over vector indexes: exact cosine top-K, Okapi BM25, hybrid, multi-query.

All searches are exact full scans; corpora are budget-bounded so there is no
need for approximate structures, and exactness keeps every ranking
oracle-checkable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .corpus import IndexEntry, VectorIndex
from .errors import DimMismatchError

BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class ScoredHit:
    entry: IndexEntry
    score: float
    source_query: str


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = 5
    mode: str = "embed"
    hybrid_weight: float = 0.5

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.mode not in ("embed", "bm25", "hybrid"):
            raise ValueError(f"unknown retrieval mode {self.mode!r}")
        if not 0.0 <= self.hybrid_weight <= 1.0:
            raise ValueError("hybrid_weight must be in [0, 1]")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


class _Bm25Stats:
    """Per-index BM25 statistics over the entry key texts."""

    def __init__(self, index: VectorIndex):
        self.doc_tokens = [tokenize(k) for k in index.key_texts()]
        self.doc_len = [len(toks) for toks in self.doc_tokens]
        self.n_docs = len(self.doc_tokens)
        self.avgdl = (sum(self.doc_len) / self.n_docs) if self.n_docs else 0.0
        self.df: dict[str, int] = {}
        for toks in self.doc_tokens:
            for term in set(toks):
                self.df[term] = self.df.get(term, 0) + 1

    def idf(self, term: str) -> float:
        # Non-negative variant: ln(1 + (n - df + 0.5) / (df + 0.5)).
        df = self.df.get(term, 0)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def scores(self, query_text: str) -> list[float]:
        terms = set(tokenize(query_text))
        out = []
        for toks, dl in zip(self.doc_tokens, self.doc_len):
            score = 0.0
            for term in terms:
                tf = toks.count(term)
                if tf == 0:
                    continue
                denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / self.avgdl)
                score += self.idf(term) * tf * (BM25_K1 + 1.0) / denom
            out.append(score)
        return out


def _bm25_stats(index: VectorIndex) -> _Bm25Stats:
    stats = getattr(index, "_bm25_stats", None)
    if stats is None:
        stats = _Bm25Stats(index)
        index._bm25_stats = stats
    return stats


def _cosine_scores(index: VectorIndex, query_vector: np.ndarray) -> np.ndarray:
    query = np.asarray(query_vector, dtype=np.float64).reshape(-1)
    if query.shape[0] != index.dim:
        raise DimMismatchError(f"query dim {query.shape[0]}, index dim {index.dim}")
    q_norm = float(np.linalg.norm(query))
    if q_norm == 0.0 or len(index) == 0:
        return np.zeros(len(index))
    matrix = index.vectors.astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    norms[norms == 0.0] = 1.0
    return (matrix @ query) / (norms * q_norm)


def _rank(index: VectorIndex, scores, k: int, source_query: str,
          keep=None) -> list[ScoredHit]:
    order = sorted(
        (i for i in range(len(index)) if keep is None or keep(scores[i])),
        key=lambda i: (-scores[i], index.entries[i].key_text),
    )
    return [
        ScoredHit(index.entries[i], float(scores[i]), source_query)
        for i in order[:k]
    ]


def vector_topk(index: VectorIndex, query_vector: np.ndarray, k: int,
                source_query: str = "") -> list[ScoredHit]:
    """Exact top-k by cosine similarity; ties break by key_text ascending."""
    scores = _cosine_scores(index, query_vector)
    return _rank(index, scores, k, source_query)


def bm25_topk(index: VectorIndex, query_text: str, k: int) -> list[ScoredHit]:
    """Okapi BM25 top-k over entry key texts; zero-score entries are dropped.

    Query terms are deduplicated, so repeating a term does not inflate its
    contribution beyond term-frequency saturation.
    """
    scores = _bm25_stats(index).scores(query_text)
    return _rank(index, scores, k, query_text, keep=lambda s: s > 0.0)


def _minmax(values: dict[int, float]) -> dict[int, float]:
    if not values:
        return {}
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        return {i: 0.0 for i in values}
    return {i: (v - lo) / (hi - lo) for i, v in values.items()}


def hybrid_topk(index: VectorIndex, query_text: str, query_vector: np.ndarray,
                k: int, weight: float = 0.5) -> list[ScoredHit]:
    """Blend cosine and BM25 rankings.

    Both methods contribute their top-k candidate pools; over the pool union
    each method's scores are min-max normalized and combined as
    weight * embed + (1 - weight) * bm25.
    """
    embed_scores = _cosine_scores(index, query_vector)
    bm25_scores = _bm25_stats(index).scores(query_text)

    embed_pool = [h.entry.key_text for h in _rank(index, embed_scores, k, query_text)]
    bm25_pool = [h.entry.key_text for h in
                 _rank(index, bm25_scores, k, query_text, keep=lambda s: s > 0.0)]
    pool_keys = set(embed_pool) | set(bm25_pool)
    pool = [i for i in range(len(index)) if index.entries[i].key_text in pool_keys]

    embed_norm = _minmax({i: float(embed_scores[i]) for i in pool})
    bm25_norm = _minmax({i: float(bm25_scores[i]) for i in pool})
    combined = {i: weight * embed_norm[i] + (1.0 - weight) * bm25_norm[i] for i in pool}

    order = sorted(pool, key=lambda i: (-combined[i], index.entries[i].key_text))
    return [ScoredHit(index.entries[i], combined[i], query_text) for i in order[:k]]


def multi_query_retrieve(queries: list[str], k: int, index: VectorIndex,
                         config: RetrievalConfig, encoder=None) -> list[ScoredHit]:
    """Union of per-query top-k results, ranked by similarity to the closest query.

    An entry hit by several queries appears once, carrying its maximum score
    and the earliest query that achieved it.
    """
    if not queries:
        raise ValueError("queries must be non-empty")
    if config.mode in ("embed", "hybrid"):
        if encoder is None:
            raise ValueError(f"mode {config.mode!r} needs an encoder")
        query_vectors = encoder.embed_batch(queries)

    best: dict[str, ScoredHit] = {}
    for q_idx, query in enumerate(queries):
        if config.mode == "embed":
            hits = vector_topk(index, query_vectors[q_idx], k, source_query=query)
        elif config.mode == "bm25":
            hits = bm25_topk(index, query, k)
        else:
            hits = hybrid_topk(index, query, query_vectors[q_idx], k, config.hybrid_weight)
        for hit in hits:
            current = best.get(hit.entry.key_text)
            if current is None or hit.score > current.score:
                best[hit.entry.key_text] = hit
    return sorted(best.values(), key=lambda h: (-h.score, h.entry.key_text))
