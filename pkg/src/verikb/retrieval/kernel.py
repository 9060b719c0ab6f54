"""Kernel selection: compiled extension when available, pure Python otherwise.

Set VERIKB_PURE=1 before import to force the pure fallback. Both entry
points return plain lists of floats and are interchangeable bit for bit.
"""

from __future__ import annotations

import math
import os

from . import _purekernel
from .index import InvertedIndex

try:
    from . import _ckernel  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:
    _ckernel = None
    HAVE_COMPILED = False


def score_all_pure(index: InvertedIndex, query_terms: list[str], k1: float, b: float) -> list[float]:
    return _purekernel.score_all(
        index.postings,
        index.doc_freq,
        index.doc_lengths,
        index.avg_doc_length,
        index.doc_count,
        query_terms,
        k1,
        b,
    )


def score_all_compiled(index: InvertedIndex, query_terms: list[str], k1: float, b: float) -> list[float]:
    if _ckernel is None:
        raise RuntimeError("compiled kernel is not available")
    import numpy as np

    scores = np.zeros(index.doc_count, dtype=np.float64)
    lengths = index.doc_lengths_array()
    for term in query_terms:
        if term not in index.postings:
            continue
        df = index.doc_freq[term]
        idf = math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))
        ordinals, tfs = index.term_arrays(term)
        _ckernel.accumulate_term(
            idf, ordinals, tfs, lengths, index.avg_doc_length, k1, b, scores
        )
    return scores.tolist()


if HAVE_COMPILED and os.environ.get("VERIKB_PURE") != "1":
    score_all = score_all_compiled
    ACTIVE_KERNEL = "compiled"
else:
    score_all = score_all_pure
    ACTIVE_KERNEL = "pure"
