import http.server
import json
import math
import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from verikb.corpus import Claim, Document, EmptyKnowledgeBaseError, KnowledgeBase
from verikb.retrieval import (
    B,
    K1,
    FixtureRetriever,
    IndexedRetriever,
    RetrieverUnavailable,
    SnapshotError,
    WebSearchRetriever,
    bm25_score,
    build_index,
    load_index,
    retrieve_top_k,
    save_index,
    tokenize,
)
from verikb.retrieval.kernel import HAVE_COMPILED, score_all_compiled, score_all_pure


def make_kb(texts, name="kb", ids=None):
    ids = ids or [f"d{i+1}" for i in range(len(texts))]
    return KnowledgeBase(
        name=name,
        documents=tuple(Document(id=i, text=t) for i, t in zip(ids, texts)),
    )


# Brute-force term-count oracle, written against the tokenizer contract
# only (lowercase, split on non-alphanumeric).
def brute_force_term_table(docs):
    table = {}
    for ordinal, doc in enumerate(docs):
        text = f"{doc.title} {doc.text}" if doc.title else doc.text
        for term in tokenize(text):
            table.setdefault(term, {}).setdefault(ordinal, 0)
            table[term][ordinal] += 1
    return table


class TestTokenize:
    def test_basic(self):
        assert tokenize("Global warming is real.") == ["global", "warming", "is", "real"]

    def test_empty(self):
        assert tokenize("") == []

    def test_hyphens_split(self):
        assert tokenize("anti-IL-2 receptor") == ["anti", "il", "2", "receptor"]

    def test_underscore_is_a_separator(self):
        assert tokenize("snake_case word") == ["snake", "case", "word"]


class TestBuildIndex:
    def test_two_doc_stats(self):
        index = build_index(make_kb(["a b", "a a"]))
        assert index.doc_count == 2
        assert index.avg_doc_length == 2.0
        assert index.doc_freq["a"] == 2
        assert index.doc_freq["b"] == 1
        assert index.postings["a"] == [(0, 1), (1, 2)]

    def test_single_doc_avg(self):
        index = build_index(make_kb(["one two three"]))
        assert index.avg_doc_length == 3.0

    def test_empty_kb(self):
        with pytest.raises(EmptyKnowledgeBaseError):
            build_index(KnowledgeBase(name="x", documents=()))

    def test_title_included_in_length(self):
        kb = KnowledgeBase(
            name="t", documents=(Document(id="d", title="Polar bear", text="Bears swim."),)
        )
        index = build_index(kb)
        assert index.doc_lengths[0] == len(tokenize("Polar bear Bears swim."))

    def test_postings_match_brute_force_on_synthetic_corpus(self):
        rng = random.Random(7)
        vocab = [f"w{i}" for i in range(50)]
        docs = [
            Document(id=f"d{i}", text=" ".join(rng.choices(vocab, k=rng.randint(1, 8))))
            for i in range(10_000)
        ]
        kb = KnowledgeBase(name="big", documents=tuple(docs))
        index = build_index(kb)
        table = brute_force_term_table(docs)
        assert set(index.postings) == set(table)
        for term, counts in table.items():
            assert index.postings[term] == sorted(counts.items())
            assert index.doc_freq[term] == len(counts)
        assert index.avg_doc_length == sum(index.doc_lengths) / index.doc_count


class TestBm25Score:
    def test_no_corpus_terms(self):
        index = build_index(make_kb(["alpha beta"]))
        assert bm25_score(index, ["zeta", "eta"], 0) == 0.0

    def test_single_doc_single_term(self):
        # idf = ln(1 + 0.5/1.5) = ln(4/3); tf part = 1.9/1.9 = 1
        index = build_index(make_kb(["warming"]))
        assert bm25_score(index, ["warming"], 0) == pytest.approx(math.log(4 / 3), abs=1e-12)

    def test_toy_ranking(self):
        kb = make_kb(["polar bear ice", "bear market stocks", "ice cream"])
        retriever = IndexedRetriever(kb)
        result, docs = retrieve_top_k(retriever, Claim(id="c", text="polar bear"), 5)
        assert result.entries[0][0] == "d1"
        assert [d.id for d in docs][0] == "d1"

    def test_monotone_in_tf(self):
        # adding one occurrence of a query term (tf+1, length+1, other
        # stats held fixed) never lowers the score when k1 > 0
        index = build_index(make_kb(["bear ice floe", "bear bear ice floe stone"]))
        base = bm25_score(index, ["bear"], 0)
        bumped_index = build_index(make_kb(["bear bear ice floe", "bear bear ice floe stone"]))
        bumped_index.avg_doc_length = index.avg_doc_length
        bumped_index.doc_freq = dict(index.doc_freq)
        assert bm25_score(bumped_index, ["bear"], 0) >= base

    @given(
        tf=st.integers(min_value=1, max_value=50),
        extra_len=st.integers(min_value=0, max_value=150),
        df=st.integers(min_value=1, max_value=100),
        n_extra=st.integers(min_value=0, max_value=1000),
        avgdl=st.floats(min_value=1.0, max_value=100.0),
    )
    def test_term_contribution_monotone(self, tf, extra_len, df, n_extra, avgdl):
        # a real document always has dl >= tf
        dl = tf + extra_len
        n_docs = df + n_extra
        idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))

        def contribution(t, length):
            norm = K1 * (1.0 - B + B * length / avgdl)
            return idf * (t * (K1 + 1.0)) / (t + norm)

        assert contribution(tf + 1, dl + 1) >= contribution(tf, dl) - 1e-15


def brute_force_rank(index, kb, claim_text, k):
    terms = tokenize(claim_text)
    scored = []
    for ordinal, doc in enumerate(kb.documents):
        score = bm25_score(index, terms, ordinal)
        if score > 0.0:
            scored.append((doc.id, score))
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:k]


class TestRetrieveTopK:
    def test_cannot_exceed_corpus(self):
        retriever = IndexedRetriever(make_kb(["a b", "b c", "c d"]))
        result, docs = retrieve_top_k(retriever, Claim(id="c", text="a b c d"), 5)
        assert len(result.entries) <= 3
        assert len(docs) == len(result.entries)

    def test_no_match_is_empty(self):
        retriever = IndexedRetriever(make_kb(["alpha beta"]))
        result, docs = retrieve_top_k(retriever, Claim(id="c", text="unrelated words"), 5)
        assert result.entries == ()
        assert result.max_score == 0.0
        assert docs == []

    def test_zero_scores_excluded(self):
        retriever = IndexedRetriever(make_kb(["match term", "nothing shared"]))
        result, _ = retrieve_top_k(retriever, Claim(id="c", text="match"), 5)
        assert [e[0] for e in result.entries] == ["d1"]

    def test_tie_break_by_doc_id(self):
        retriever = IndexedRetriever(make_kb(["same text", "same text"], ids=["z", "a"]))
        result, _ = retrieve_top_k(retriever, Claim(id="c", text="same"), 5)
        assert [e[0] for e in result.entries] == ["a", "z"]
        assert result.entries[0][1] == result.entries[1][1]

    def test_oracle_equivalence_random(self):
        rng = random.Random(1234)
        vocab = [f"t{i}" for i in range(40)]
        for _ in range(30):
            n_docs = rng.randint(1, 200)
            texts = [
                " ".join(rng.choices(vocab, k=rng.randint(1, 30))) for _ in range(n_docs)
            ]
            kb = make_kb(texts)
            retriever = IndexedRetriever(kb)
            for _ in range(3):
                query = " ".join(rng.choices(vocab, k=rng.randint(1, 6)))
                k = rng.randint(1, 10)
                result, docs = retrieve_top_k(retriever, Claim(id="q", text=query), k)
                expected = brute_force_rank(retriever.index, kb, query, k)
                assert list(result.entries) == expected
                assert [d.id for d in docs] == [e[0] for e in expected]
                assert result.max_score == (expected[0][1] if expected else 0.0)

    def test_determinism_across_runs(self):
        kb = make_kb(["polar bear", "bear den", "ice sheet"])
        claim = Claim(id="c", text="polar bear ice")
        first = IndexedRetriever(kb).retrieve(claim, 5)[0]
        second = IndexedRetriever(kb).retrieve(claim, 5)[0]
        assert first == second


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
class TestKernelParity:
    def test_pure_and_compiled_bit_identical(self):
        rng = random.Random(99)
        vocab = [f"v{i}" for i in range(30)]
        for _ in range(20):
            texts = [
                " ".join(rng.choices(vocab, k=rng.randint(1, 25)))
                for _ in range(rng.randint(1, 150))
            ]
            index = build_index(make_kb(texts))
            query = rng.choices(vocab, k=rng.randint(1, 8))
            pure = score_all_pure(index, query, K1, B)
            compiled = score_all_compiled(index, query, K1, B)
            assert pure == compiled
            per_doc = [bm25_score(index, query, o) for o in range(index.doc_count)]
            assert per_doc == pure


class TestSnapshot:
    def test_round_trip_same_results(self, tmp_path, kb_science):
        index = build_index(kb_science)
        path = tmp_path / "science.vkbi"
        save_index(kb_science, index, path)
        kb2, index2 = load_index(path)
        assert kb2.documents == kb_science.documents
        claim = Claim(id="c", text="coral reefs bleach when temperatures rise")
        before = IndexedRetriever(kb_science, index).retrieve(claim, 5)
        after = IndexedRetriever(kb2, index2).retrieve(claim, 5)
        assert before[0] == after[0]

    def test_rebuild_is_byte_identical(self, tmp_path, kb_science):
        a, b = tmp_path / "a.vkbi", tmp_path / "b.vkbi"
        save_index(kb_science, build_index(kb_science), a)
        save_index(kb_science, build_index(kb_science), b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.vkbi"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(SnapshotError, match="magic"):
            load_index(path)

    def test_version_mismatch_rejected(self, tmp_path, kb_science):
        path = tmp_path / "v.vkbi"
        save_index(kb_science, build_index(kb_science), path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError, match="version"):
            load_index(path)


class TestFixtureRetriever:
    def test_replay_with_rank_scores(self, tmp_path):
        path = tmp_path / "hits.jsonl"
        path.write_text(
            json.dumps(
                {
                    "claim_id": "c7",
                    "hits": [
                        {"id": "d2", "text": "first hit text."},
                        {"id": "d9", "text": "second hit text."},
                    ],
                }
            )
            + "\n",
            encoding="utf-8",
        )
        retriever = FixtureRetriever.from_file(path, name="web")
        result, docs = retrieve_top_k(retriever, Claim(id="c7", text="whatever"))
        assert [e[0] for e in result.entries] == ["d2", "d9"]
        assert [e[1] for e in result.entries] == [2.0, 1.0]
        assert result.max_score == 2.0
        assert [d.id for d in docs] == ["d2", "d9"]

    def test_unknown_claim_is_empty(self, fixtures_dir):
        retriever = FixtureRetriever.from_file(fixtures_dir / "kbs" / "web_hits.jsonl", name="web")
        result, docs = retrieve_top_k(retriever, Claim(id="missing", text="x"))
        assert result.entries == () and docs == []

    def test_default_k_is_ten(self, tmp_path):
        hits = [{"id": f"h{i:02d}", "text": f"hit {i}."} for i in range(12)]
        path = tmp_path / "hits.jsonl"
        path.write_text(json.dumps({"claim_id": "c", "hits": hits}) + "\n", encoding="utf-8")
        retriever = FixtureRetriever.from_file(path, name="web")
        result, docs = retrieve_top_k(retriever, Claim(id="c", text="x"))
        assert len(docs) == 10
        assert result.entries[0][1] == 10.0


class _SearchHandler(http.server.BaseHTTPRequestHandler):
    fail_times = 0
    calls = 0

    def do_GET(self):
        type(self).calls += 1
        if type(self).fail_times > 0:
            type(self).fail_times -= 1
            self.send_response(503)
            self.end_headers()
            return
        body = json.dumps(
            {"hits": [{"id": "h1", "text": "a web snippet about the claim."}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def search_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), _SearchHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _SearchHandler.fail_times = 0
    _SearchHandler.calls = 0
    yield f"http://127.0.0.1:{server.server_port}/search"
    server.shutdown()


class TestWebSearchRetriever:
    def test_success(self, search_server):
        retriever = WebSearchRetriever(name="web", endpoint=search_server, backoff=0.01)
        result, docs = retrieve_top_k(retriever, Claim(id="c", text="anything"))
        assert [d.id for d in docs] == ["h1"]
        assert result.entries[0][1] == 1.0

    def test_hits_config_sets_default_k(self, search_server):
        retriever = WebSearchRetriever(name="web", endpoint=search_server, hits=3)
        assert retriever.default_k == 3

    def test_retry_then_success(self, search_server):
        _SearchHandler.fail_times = 2
        retriever = WebSearchRetriever(name="web", endpoint=search_server, backoff=0.01)
        _, docs = retrieve_top_k(retriever, Claim(id="c", text="anything"))
        assert docs and _SearchHandler.calls == 3

    def test_persistent_failure(self, search_server):
        _SearchHandler.fail_times = 10
        retriever = WebSearchRetriever(
            name="web", endpoint=search_server, max_retries=2, backoff=0.01
        )
        with pytest.raises(RetrieverUnavailable):
            retrieve_top_k(retriever, Claim(id="c", text="anything"))
