import hashlib
import json
from pathlib import Path

import pytest

from verikb.corpus import Label, load_kb, load_task
from verikb.policy import KbRegistry
from verikb.retrieval import IndexedRetriever
from verikb.verdict import Verdict, make_verdict

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def main_task():
    return load_task(FIXTURES / "tasks" / "main20.jsonl", name="main20")


@pytest.fixture(scope="session")
def balanced_task():
    return load_task(FIXTURES / "tasks" / "balanced21.jsonl", name="balanced21")


@pytest.fixture(scope="session")
def nonei_task():
    return load_task(FIXTURES / "tasks" / "nonei10.jsonl", name="nonei10")


@pytest.fixture(scope="session")
def kb_general():
    return load_kb(FIXTURES / "kbs" / "general.jsonl", name="general")


@pytest.fixture(scope="session")
def kb_science():
    return load_kb(FIXTURES / "kbs" / "science.jsonl", name="science")


@pytest.fixture(scope="session")
def kb_news():
    return load_kb(FIXTURES / "kbs" / "news.jsonl", name="news")


@pytest.fixture()
def registry3(kb_general, kb_science, kb_news) -> KbRegistry:
    registry = KbRegistry()
    for kb in (kb_general, kb_science, kb_news):
        registry.add(IndexedRetriever(kb))
    return registry


def stable_unit(*parts: str) -> float:
    """Deterministic pseudo-random float in [0, 1) from string parts."""
    digest = hashlib.sha1("\x00".join(parts).encode("utf-8")).hexdigest()
    return int(digest[:8], 16) / 0x100000000


class HashScorer:
    """Deterministic mock evidence scorer; scores in (0.02, 0.98)."""

    def __init__(self, salt: str = ""):
        self.salt = salt
        self.calls = 0

    def score(self, claim_text: str, sentence_text: str) -> float:
        return 0.02 + 0.96 * stable_unit("score", self.salt, claim_text, sentence_text)

    def score_batch(self, pairs):
        self.calls += 1
        return [self.score(c, s) for c, s in pairs]


class HashClassifier:
    """Deterministic mock classifier keyed on the claim and top evidence."""

    def classify_one(self, claim, evidence) -> Verdict:
        top = evidence.sentences[0].text if evidence.sentences else ""
        u = stable_unit("verdict", claim.text, top)
        if not evidence.sentences:
            return make_verdict((0.0, 0.0, 1.0))
        if u < 1 / 3:
            return make_verdict((0.8, 0.15, 0.05))
        if u < 2 / 3:
            return make_verdict((0.15, 0.8, 0.05))
        return make_verdict((0.05, 0.15, 0.8))

    def classify_batch(self, items):
        return [self.classify_one(claim, ev) for claim, ev in items]


class TableScorer:
    """Mock scorer returning a fixed score per document id prefix."""

    def __init__(self, by_doc_prefix: dict[str, float], default: float = 0.02):
        self.by_doc_prefix = by_doc_prefix
        self.default = default
        self._sentence_to_doc: dict[str, str] = {}

    def register(self, doc_id: str, sentences) -> None:
        for s in sentences:
            self._sentence_to_doc[s] = doc_id

    def score_batch(self, pairs):
        out = []
        for _, sentence in pairs:
            doc_id = self._sentence_to_doc.get(sentence, "")
            for prefix, value in self.by_doc_prefix.items():
                if doc_id.startswith(prefix):
                    out.append(value)
                    break
            else:
                out.append(self.default)
        return out


@pytest.fixture(scope="session")
def reference_tables():
    with open(FIXTURES / "reference_tables.json", encoding="utf-8") as fh:
        return json.load(fh)


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


def golds_of(task) -> list[Label | None]:
    return [claim.gold for claim in task.claims]
