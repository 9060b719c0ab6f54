"""Benchmark the compiled BM25 kernel against the pure-Python fallback.

Builds a synthetic corpus, runs the same query batch through both kernels,
checks bit-identical scores, and reports throughput.

    python benchmarks/bench_bm25.py --docs 50000 --queries 200
"""

import argparse
import random
import time

from verikb.corpus import Document, KnowledgeBase
from verikb.retrieval import B, K1, build_index
from verikb.retrieval.kernel import HAVE_COMPILED, score_all_compiled, score_all_pure


def synthetic_index(n_docs: int, vocab_size: int, seed: int):
    rng = random.Random(seed)
    vocab = [f"term{i}" for i in range(vocab_size)]
    docs = tuple(
        Document(id=f"d{i}", text=" ".join(rng.choices(vocab, k=rng.randint(20, 120))))
        for i in range(n_docs)
    )
    queries = [rng.choices(vocab, k=rng.randint(2, 6)) for _ in range(200)]
    return build_index(KnowledgeBase(name="bench", documents=docs)), queries


def timed(fn, index, queries):
    for q in queries:  # untimed warm pass (term-array caches, allocator)
        fn(index, q, K1, B)
    start = time.perf_counter()
    results = [fn(index, q, K1, B) for q in queries]
    return time.perf_counter() - start, results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=20000)
    parser.add_argument("--vocab", type=int, default=2000)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    print(f"building index: {args.docs} docs, vocab {args.vocab} ...")
    index, queries = synthetic_index(args.docs, args.vocab, args.seed)
    queries = queries[: args.queries]

    pure_time, pure_results = timed(score_all_pure, index, queries)
    print(f"pure python : {pure_time:8.3f}s  ({len(queries)/pure_time:7.1f} queries/s)")

    if not HAVE_COMPILED:
        print("compiled    : extension not built (pip install -e . rebuilds it)")
        return

    compiled_time, compiled_results = timed(score_all_compiled, index, queries)
    print(
        f"compiled    : {compiled_time:8.3f}s  ({len(queries)/compiled_time:7.1f} queries/s)"
    )
    print(f"speedup     : {pure_time / compiled_time:8.2f}x")

    mismatches = sum(1 for p, c in zip(pure_results, compiled_results) if p != c)
    print(f"bit-identical results: {'yes' if mismatches == 0 else f'NO ({mismatches} queries differ)'}")


if __name__ == "__main__":
    main()
