"""Claim tasks, knowledge bases, and on-disk loading.

Both file formats are JSON-lines (UTF-8, one object per line):

* task file:  {"id": str, "text": str, "label"?: "SUPPORTED"|"REFUTED"|"NOT_ENOUGH_INFO"}
* KB file:    {"id": str, "title"?: str, "text": str}

All text is NFC-normalized on load so downstream tokenization is stable.
Loaded values are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class CorpusError(Exception):
    """A task or KB file violates the on-disk contract."""


class MalformedLineError(CorpusError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no


class DuplicateIdError(CorpusError):
    def __init__(self, path, line_no: int, dup_id: str):
        super().__init__(f"{path}:{line_no}: duplicate id {dup_id!r}")
        self.line_no = line_no
        self.dup_id = dup_id


class EmptyTaskError(CorpusError):
    pass


class EmptyKnowledgeBaseError(CorpusError):
    pass


class EmptyDocumentError(CorpusError):
    def __init__(self, path, line_no: int):
        super().__init__(f"{path}:{line_no}: document text is empty")
        self.line_no = line_no


class Label(Enum):
    """Ternary veracity label. Member order is the canonical vector order."""

    SUPPORTED = "SUPPORTED"
    REFUTED = "REFUTED"
    NOT_ENOUGH_INFO = "NOT_ENOUGH_INFO"


LABELS: tuple[Label, Label, Label] = (
    Label.SUPPORTED,
    Label.REFUTED,
    Label.NOT_ENOUGH_INFO,
)


class RetrieverKind(Enum):
    INDEXED = "indexed"
    WEB_SEARCH = "websearch"
    FIXTURE = "fixture"


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    gold: Label | None = None


@dataclass(frozen=True)
class ClaimTask:
    name: str
    claims: tuple[Claim, ...]

    def label_distribution(self) -> dict[Label, int]:
        counts = {label: 0 for label in LABELS}
        for claim in self.claims:
            if claim.gold is not None:
                counts[claim.gold] += 1
        return counts


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    title: str | None = None
    # cache slot for the derived sentence list; not part of equality
    _sentences: list[str] | None = field(
        default=None, repr=False, compare=False, hash=False
    )

    @property
    def sentences(self) -> list[str]:
        if self._sentences is None:
            object.__setattr__(self, "_sentences", split_sentences(self.text))
        return self._sentences  # type: ignore[return-value]


@dataclass(frozen=True)
class KnowledgeBase:
    name: str
    documents: tuple[Document, ...]
    retriever_kind: RetrieverKind = RetrieverKind.INDEXED


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _iter_jsonl(path: Path):
    """Yield (line_no, parsed object); blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(path, line_no, f"invalid JSON ({exc.msg})")
            if not isinstance(obj, dict):
                raise MalformedLineError(path, line_no, "line is not a JSON object")
            yield line_no, obj


def load_task(path: str | Path, name: str | None = None) -> ClaimTask:
    """Load a claim task from a JSON-lines file.

    Raises on duplicate ids, unknown label strings, empty claim text,
    and empty files; line numbers are reported for malformed lines.
    """
    path = Path(path)
    claims: list[Claim] = []
    seen: set[str] = set()
    for line_no, obj in _iter_jsonl(path):
        try:
            claim_id = obj["id"]
            text = obj["text"]
        except KeyError as exc:
            raise MalformedLineError(path, line_no, f"missing field {exc.args[0]!r}")
        if not isinstance(claim_id, str) or not claim_id:
            raise MalformedLineError(path, line_no, "id must be a non-empty string")
        if not isinstance(text, str) or not text.strip():
            raise MalformedLineError(path, line_no, "text must be a non-empty string")
        if claim_id in seen:
            raise DuplicateIdError(path, line_no, claim_id)
        seen.add(claim_id)
        gold = None
        if obj.get("label") is not None:
            raw = obj["label"]
            try:
                gold = Label(raw)
            except ValueError:
                raise MalformedLineError(path, line_no, f"unknown label {raw!r}")
        claims.append(Claim(id=claim_id, text=_nfc(text).strip(), gold=gold))
    if not claims:
        raise EmptyTaskError(f"{path}: task file contains no claims")
    return ClaimTask(name=name or path.stem, claims=tuple(claims))


def load_kb(
    path: str | Path,
    name: str,
    retriever_kind: RetrieverKind = RetrieverKind.INDEXED,
) -> KnowledgeBase:
    """Load a knowledge base from a JSON-lines file of documents."""
    path = Path(path)
    docs: list[Document] = []
    seen: set[str] = set()
    for line_no, obj in _iter_jsonl(path):
        try:
            doc_id = obj["id"]
            text = obj["text"]
        except KeyError as exc:
            raise MalformedLineError(path, line_no, f"missing field {exc.args[0]!r}")
        if not isinstance(doc_id, str) or not doc_id:
            raise MalformedLineError(path, line_no, "id must be a non-empty string")
        if not isinstance(text, str) or not text.strip():
            raise EmptyDocumentError(path, line_no)
        if doc_id in seen:
            raise DuplicateIdError(path, line_no, doc_id)
        seen.add(doc_id)
        title = obj.get("title")
        if title is not None and not isinstance(title, str):
            raise MalformedLineError(path, line_no, "title must be a string")
        docs.append(
            Document(
                id=doc_id,
                text=_nfc(text).strip(),
                title=_nfc(title) if title is not None else None,
            )
        )
    if not docs and retriever_kind is RetrieverKind.INDEXED:
        raise EmptyKnowledgeBaseError(f"{path}: KB file contains no documents")
    return KnowledgeBase(name=name, documents=tuple(docs), retriever_kind=retriever_kind)


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    """Serialize a KB back to JSON-lines; round-trips through load_kb."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in kb.documents:
            record: dict = {"id": doc.id}
            if doc.title is not None:
                record["title"] = doc.title
            record["text"] = doc.text
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Sentence splitting
#
# Deterministic rule-based splitter: a sentence ends at a run of {. ! ?}
# followed by whitespace (or end of text).  A lone '.' does not end a
# sentence when the word it closes is a known abbreviation or a single
# initial ("J."), so "Dr. Smith" and "U.S. economy" stay intact while
# "..., 2012. While" splits.

_TERMINATORS = ".!?"

ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "rev.", "gen.", "sen.", "gov.",
        "capt.", "sgt.", "jr.", "sr.", "st.", "vs.", "etc.", "e.g.", "i.e.",
        "cf.", "ca.", "al.", "et.", "fig.", "figs.", "eq.", "eqs.", "sec.",
        "no.", "nos.", "vol.", "vols.", "pp.", "a.m.", "p.m.", "u.s.", "u.k.",
        "u.n.", "e.u.", "d.c.", "inc.", "ltd.", "co.", "corp.", "dept.",
        "approx.", "mt.", "ft.", "jan.", "feb.", "mar.", "apr.", "jun.",
        "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
    }
)

_OPENING_PUNCT = "([{'\"“‘"


def _word_ending_at(text: str, period_idx: int) -> str:
    start = period_idx
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : period_idx + 1]


def split_sentences(text: str) -> list[str]:
    """Split text into trimmed sentence segments.

    Deterministic and idempotent: feeding a single returned sentence back
    in yields a one-element list. No characters other than boundary
    whitespace are dropped, so joining the segments with single spaces
    reconstructs the text up to whitespace normalization.
    """
    segments: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] not in _TERMINATORS:
            i += 1
            continue
        j = i
        while j + 1 < n and text[j + 1] in _TERMINATORS:
            j += 1
        at_end = j + 1 >= n
        if at_end or text[j + 1].isspace():
            guarded = False
            if i == j and text[j] == ".":
                word = _word_ending_at(text, j).lstrip(_OPENING_PUNCT)
                if word.lower() in ABBREVIATIONS:
                    guarded = True
                elif len(word) == 2 and word[0].isalpha():
                    guarded = True
            if not guarded and not at_end:
                segment = text[start : j + 1].strip()
                if segment:
                    segments.append(segment)
                start = j + 1
        i = j + 1
    tail = text[start:].strip()
    if tail:
        segments.append(tail)
    return segments
