# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled BM25 batch-scoring kernel.

One call accumulates a single query term's contributions over its posting
arrays. The floating-point expression structure must match
_purekernel.score_all exactly: the pure fallback and this kernel are
required to produce bit-identical scores.
"""


def accumulate_term(
    double term_idf,
    long long[::1] ordinals,
    long long[::1] tfs,
    long long[::1] doc_lengths,
    double avg_doc_length,
    double k1,
    double b,
    double[::1] scores,
):
    cdef Py_ssize_t pi
    cdef long long o
    cdef double tf, norm
    cdef double weight = k1 + 1.0
    for pi in range(ordinals.shape[0]):
        o = ordinals[pi]
        tf = <double> tfs[pi]
        norm = k1 * (1.0 - b + b * <double> doc_lengths[o] / avg_doc_length)
        scores[o] += term_idf * (tf * weight) / (tf + norm)
