"""Pure-Python BM25 batch-scoring kernel (fallback for the compiled one).

Arithmetic here must stay expression-for-expression identical to
_ckernel.pyx and to index.bm25_score: retrieval correctness tests assert
bit-equality between all three paths.
"""

from __future__ import annotations

import math


def score_all(
    postings: dict[str, list[tuple[int, int]]],
    doc_freq: dict[str, int],
    doc_lengths: list[int],
    avg_doc_length: float,
    doc_count: int,
    query_terms: list[str],
    k1: float,
    b: float,
) -> list[float]:
    scores = [0.0] * doc_count
    weight = k1 + 1.0
    for term in query_terms:
        plist = postings.get(term)
        if not plist:
            continue
        df = doc_freq[term]
        term_idf = math.log(1.0 + (doc_count - df + 0.5) / (df + 0.5))
        for ordinal, tf in plist:
            norm = k1 * (1.0 - b + b * doc_lengths[ordinal] / avg_doc_length)
            scores[ordinal] += term_idf * (tf * weight) / (tf + norm)
    return scores
