"""BM25 retrieval over knowledge bases, plus fixture/web retrievers."""

from .index import (
    B,
    K1,
    InvertedIndex,
    SnapshotError,
    bm25_score,
    build_index,
    idf,
    indexed_text,
    load_index,
    save_index,
    tokenize,
)
from .kernel import ACTIVE_KERNEL, HAVE_COMPILED, score_all_compiled, score_all_pure
from .retrievers import (
    DEFAULT_K_INDEXED,
    DEFAULT_K_WEB,
    EMPTY_RESULT,
    FixtureRetriever,
    IndexedRetriever,
    RetrievalResult,
    Retriever,
    RetrieverUnavailable,
    WebSearchRetriever,
    retrieve_top_k,
)

__all__ = [
    "ACTIVE_KERNEL",
    "B",
    "DEFAULT_K_INDEXED",
    "DEFAULT_K_WEB",
    "EMPTY_RESULT",
    "FixtureRetriever",
    "HAVE_COMPILED",
    "IndexedRetriever",
    "InvertedIndex",
    "K1",
    "RetrievalResult",
    "Retriever",
    "RetrieverUnavailable",
    "SnapshotError",
    "WebSearchRetriever",
    "bm25_score",
    "build_index",
    "idf",
    "indexed_text",
    "load_index",
    "retrieve_top_k",
    "save_index",
    "score_all_compiled",
    "score_all_pure",
    "tokenize",
]
