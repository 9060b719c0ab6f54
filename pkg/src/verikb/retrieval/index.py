"""Inverted index construction and BM25 scoring.

Scoring uses the Lucene-flavoured BM25 with k1=0.9, b=0.4 and
idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Title and body are indexed
as one field (title first) because claims frequently name the article
they are about.
"""

from __future__ import annotations

import json
import math
import re
import struct
import zlib
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import Document, EmptyKnowledgeBaseError, KnowledgeBase, RetrieverKind

K1 = 0.9
B = 0.4

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters; no stemming."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class InvertedIndex:
    # postings[term] is sorted by doc ordinal
    postings: dict[str, list[tuple[int, int]]]
    doc_lengths: list[int]
    avg_doc_length: float
    doc_count: int
    doc_freq: dict[str, int]
    _lengths_arr: object = field(default=None, repr=False, compare=False)
    _term_arrays: dict = field(default_factory=dict, repr=False, compare=False)

    def doc_lengths_array(self):
        """int64 view of doc lengths, cached for the compiled kernel."""
        if self._lengths_arr is None:
            import numpy as np

            self._lengths_arr = np.asarray(self.doc_lengths, dtype=np.int64)
        return self._lengths_arr

    def term_arrays(self, term: str):
        """Cached contiguous (ordinals, tfs) arrays for one term's postings."""
        cached = self._term_arrays.get(term)
        if cached is None:
            import numpy as np

            plist = self.postings[term]
            cached = (
                np.fromiter((p[0] for p in plist), dtype=np.int64, count=len(plist)),
                np.fromiter((p[1] for p in plist), dtype=np.int64, count=len(plist)),
            )
            self._term_arrays[term] = cached
        return cached


def indexed_text(doc: Document) -> str:
    return f"{doc.title} {doc.text}" if doc.title else doc.text


def build_index(kb: KnowledgeBase) -> InvertedIndex:
    if kb.retriever_kind is not RetrieverKind.INDEXED:
        raise ValueError(f"KB {kb.name!r} is not an indexed KB")
    if not kb.documents:
        raise EmptyKnowledgeBaseError(f"KB {kb.name!r} has no documents")

    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    for ordinal, doc in enumerate(kb.documents):
        terms = tokenize(indexed_text(doc))
        doc_lengths.append(len(terms))
        counts: dict[str, int] = {}
        for term in terms:
            counts[term] = counts.get(term, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((ordinal, tf))

    doc_count = len(kb.documents)
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=sum(doc_lengths) / doc_count,
        doc_count=doc_count,
        doc_freq={term: len(plist) for term, plist in postings.items()},
    )


def idf(index: InvertedIndex, term: str) -> float:
    df = index.doc_freq.get(term, 0)
    if df == 0:
        return 0.0
    return math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))


def bm25_score(index: InvertedIndex, query_terms: list[str], ordinal: int) -> float:
    """Score one document against the query terms.

    The expression structure mirrors the batch kernels exactly so that
    brute-force per-document scoring and top-k retrieval agree bit for bit.
    """
    dl = index.doc_lengths[ordinal]
    score = 0.0
    for term in query_terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        pos = bisect_left(plist, (ordinal,))
        if pos == len(plist) or plist[pos][0] != ordinal:
            continue
        tf = plist[pos][1]
        df = index.doc_freq[term]
        term_idf = math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))
        norm = K1 * (1.0 - B + B * dl / index.avg_doc_length)
        score += term_idf * (tf * (K1 + 1.0)) / (tf + norm)
    return score


# ---------------------------------------------------------------------------
# Index snapshots
#
# Layout: b"VKBI" | uint32 version | uint64 payload length | zlib(JSON).
# The payload carries the documents too, so a snapshot alone can answer
# queries. Payload JSON is canonicalized (sorted keys), which makes
# rebuilds of an unchanged KB byte-identical.

SNAPSHOT_MAGIC = b"VKBI"
SNAPSHOT_VERSION = 1


class SnapshotError(Exception):
    pass


def save_index(kb: KnowledgeBase, index: InvertedIndex, path: str | Path) -> None:
    payload = {
        "name": kb.name,
        "documents": [
            {"id": d.id, "title": d.title, "text": d.text} for d in kb.documents
        ],
        "postings": {t: plist for t, plist in index.postings.items()},
        "doc_lengths": index.doc_lengths,
        "avg_doc_length": index.avg_doc_length,
        "doc_count": index.doc_count,
        "doc_freq": index.doc_freq,
    }
    blob = zlib.compress(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode(
            "utf-8"
        ),
        9,
    )
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IQ", SNAPSHOT_VERSION, len(blob)))
        fh.write(blob)


def load_index(path: str | Path) -> tuple[KnowledgeBase, InvertedIndex]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotError(f"{path}: not an index snapshot (bad magic {magic!r})")
        header = fh.read(12)
        if len(header) != 12:
            raise SnapshotError(f"{path}: truncated header")
        version, length = struct.unpack("<IQ", header)
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(
                f"{path}: unsupported snapshot version {version} "
                f"(expected {SNAPSHOT_VERSION})"
            )
        blob = fh.read(length)
        if len(blob) != length:
            raise SnapshotError(f"{path}: truncated payload")
    payload = json.loads(zlib.decompress(blob).decode("utf-8"))
    kb = KnowledgeBase(
        name=payload["name"],
        documents=tuple(
            Document(id=d["id"], title=d["title"], text=d["text"])
            for d in payload["documents"]
        ),
        retriever_kind=RetrieverKind.INDEXED,
    )
    index = InvertedIndex(
        postings={
            t: [(o, tf) for o, tf in plist] for t, plist in payload["postings"].items()
        },
        doc_lengths=payload["doc_lengths"],
        avg_doc_length=payload["avg_doc_length"],
        doc_count=payload["doc_count"],
        doc_freq=payload["doc_freq"],
    )
    return kb, index
