"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines; every criterion enforces its stated tolerance and runtime budget.
"""

from __future__ import annotations

import math
import random
import time

import numpy as np
import pytest

from helpers import (
    edge_pair_index,
    oracle_edge_set,
    oracle_execute,
    oracle_name_project_pairs,
    oracle_recommend,
    oracle_validate,
    random_graph,
    random_query,
    random_rules,
    scripted_mock_rules,
    scripted_questions,
)

from compatkg.gateway import (
    AgentMode,
    Gazetteer,
    chat_turn,
    extract_keywords,
)
from compatkg.graph import Cardinality, Polarity, build_graph, node_id_for
from compatkg.graphio import ExportFormat, export_graph, graphs_equal, import_graph
from compatkg.ingest import (
    DeriveRule,
    SelectRule,
    TextRule,
    compile_rules,
    parse_rules,
)
from compatkg.llm import MockLlmClient
from compatkg.query import (
    assert_readonly,
    execute_query,
    keyword_template_query,
    parse_query,
    print_query,
)
from compatkg.recommend import Configuration, recommend_for, validate_config
from compatkg.retrieval import Chunk, LocalEmbedder, VectorStore, chunk_text, search_topk

M70T = "ThinkCentre M70T Gen5"


class _Criterion:
    def __init__(self, name: str, budget_secs: float | None):
        self.name = name
        self.budget = budget_secs
        self.started = time.perf_counter()

    def finish(self) -> None:
        elapsed = time.perf_counter() - self.started
        if self.budget is not None and elapsed >= self.budget:
            print(f"[FAIL] {self.name} (runtime {elapsed:.2f}s over {self.budget:.0f}s budget)")
            pytest.fail(f"{self.name}: runtime {elapsed:.2f}s exceeds {self.budget:.0f}s")
        print(f"[PASS] {self.name} ({elapsed:.2f}s)")


def test_parser_coverage(corpus):
    crit = _Criterion("parser coverage: every fixture rule parses or quarantines", 5.0)
    records, load_q, asts, parse_q = corpus
    assert len(records) == 47 and len(load_q) == 3
    assert len(asts) + len(parse_q) == len(records)
    assert all(q.reason for q in load_q + parse_q)

    by_key = {(a.source.project_name, a.source.rule_index): a for a in asts}
    one_from = by_key[("YTM400RR", 0)]
    assert isinstance(one_from, SelectRule)
    assert one_from.cardinality is Cardinality.EXACTLY_ONE
    assert len(one_from.members) >= 1 and one_from.members[0].part_id == "SBB1K34259"

    zero_one = by_key[("YTM400RR", 2)]
    assert isinstance(zero_one, SelectRule)
    assert zero_one.cardinality is Cardinality.ZERO_OR_ONE

    derive = by_key[("YTM400RR", 14)]
    assert isinstance(derive, DeriveRule)
    assert derive.consequent.display_name == "L1 COPT Mouse Pad1"
    assert len(derive.antecedents) == 2
    assert all(len(conj) == 1 for conj in derive.antecedents)

    text = by_key[("YTM4609AB/neo P6009AB/Moncton.Y113L1", 95)]
    assert isinstance(text, TextRule)
    assert text.polarity is Polarity.SHOULD_NOT
    assert len(text.condition.leaves()) == 1 and len(text.targets) == 1
    crit.finish()


def test_graph_compile_oracle(corpus, corpus_graph, table1_graph):
    crit = _Criterion("graph compile: counts equal the independent dedup script", 5.0)
    _, _, asts, _ = corpus
    stats = corpus_graph.stats()
    assert stats.node_count == len(oracle_name_project_pairs(asts))

    expected_edges = oracle_edge_set(asts)
    assert stats.edge_count == len(expected_edges)
    actual_edges = {
        (
            corpus_graph.node(e.src).name,
            corpus_graph.node(e.dst).name,
            e.polarity.value,
            corpus_graph.node(e.src).project_name,
        )
        for e in corpus_graph.edges
    }
    assert actual_edges == expected_edges

    t1 = [
        (table1_graph.node(e.src).name, table1_graph.node(e.dst).name, e.polarity.value)
        for e in table1_graph.edges
    ]
    assert sorted(t1) == [
        ("PCI Card Holder Kit for RTX3050 8G", "RTX3050 8GB G6 128b H+3DP HP", "Should"),
        ("SATA 2TB 7200 RPM/6Gb", "Optional 3.5HDD screw and grommet kit", "ShouldNot"),
    ]
    assert table1_graph.stats().node_count == 4
    crit.finish()


def test_query_engine_equivalence():
    crit = _Criterion("query engine: 500 randomized pairs match the brute-force oracle", 60.0)
    rng = random.Random(20240516)
    pairs = 0
    while pairs < 500:
        graph = random_graph(rng, max_nodes=200)
        index = edge_pair_index(graph)
        for _ in range(5):
            ast = random_query(rng, graph)
            table = execute_query(ast, graph)
            columns, rows = oracle_execute(ast, graph, index)
            assert table.columns == columns
            assert table.rows == tuple(rows)
            pairs += 1
    assert pairs >= 500
    crit.finish()


def test_keyword_pipeline(corpus_graph):
    crit = _Criterion("keyword pipeline: canonical question and template result", None)
    gazetteer = Gazetteer.from_graph(corpus_graph)
    keys = extract_keywords("Tell me the GFX3050 T3 rule about M70t Gen5.", gazetteer)
    assert keys.name_keys == ("3050",)
    assert keys.project_keys == ("M70t Gen5",)

    table = execute_query(parse_query(keyword_template_query(keys)), corpus_graph)
    expected = sorted(
        n.name
        for n in corpus_graph.nodes
        if "3050" in n.name.lower() and "m70t gen5" in n.project_name.lower()
    )
    assert sorted(row[0] for row in table.rows) == expected
    assert len(table.rows) == len(expected)
    crit.finish()


def test_recommender_soundness(m70t_graph):
    crit = _Criterion("recommender: PSU exclusion plus exhaustive-oracle equality", 30.0)
    rtx = m70t_graph.node(node_id_for("RTX 3050 GPU", M70T))
    es = m70t_graph.node(node_id_for("ES Chassis", M70T))
    for selection in ([rtx.id], [rtx.id, es.id]):
        config = Configuration.of(M70T, selection)
        names = [
            r.candidate.name
            for r in recommend_for(m70t_graph, config, target_category="PSU")
        ]
        assert all("180w" not in name for name in names)
    both = recommend_for(
        m70t_graph, Configuration.of(M70T, [rtx.id, es.id]), target_category="PSU"
    )
    assert [r.candidate.name for r in both] == ["260w 90% PSU"]

    rng = random.Random(4242)
    for _ in range(150):
        graph = random_graph(rng, max_nodes=15, max_edges=25)
        rules = random_rules(rng, graph)
        ids = [n.id for n in graph.nodes]
        selected = set(rng.sample(ids, rng.randint(0, min(6, len(ids)))))
        project = graph.node(next(iter(selected))).project_name if selected else "P"
        same_project = {
            i for i in selected if graph.node(i).project_name == project
        }
        config = Configuration.of(project, same_project)
        category = rng.choice([None, "PSU", "VA"])
        got = [
            (r.candidate.id, r.score, r.supporting_rules)
            for r in recommend_for(graph, config, category)
        ]
        assert got == oracle_recommend(graph, set(config.selected), category)
        engine = {
            (v.kind.value, v.involved, v.rule_index)
            for v in validate_config(graph, rules, config)
        }
        assert engine == oracle_validate(graph, rules, set(config.selected))
    crit.finish()


def test_end_to_end_determinism(corpus_graph, fixture_dir):
    crit = _Criterion("chat pipeline: 100 scripted turns byte-identical twice", 30.0)
    from compatkg.retrieval import build_store

    emb = LocalEmbedder()
    docs = {
        p.name: p.read_text() for p in sorted((fixture_dir / "docs").glob("*.txt"))
    }
    store = build_store(docs, emb)
    questions = scripted_questions(corpus_graph, count=100)

    def run() -> bytes:
        client = MockLlmClient(scripted_mock_rules())
        blobs = []
        for question, mode in questions:
            turn = chat_turn(
                question, mode, corpus_graph, client, doc_store=store, embedder=emb
            )
            if turn.trace.generated_query is not None:
                assert_readonly(turn.trace.generated_query)
            assert turn.trace.attempts <= 3
            blobs.append(turn.serialize())
        return b"".join(blobs)

    first, second = run(), run()
    assert first == second
    crit.finish()


def test_retrieval_correctness():
    crit = _Criterion("retrieval: top-k vs brute force, unit norms, offset reassembly", 30.0)
    rng = random.Random(77)
    emb = LocalEmbedder(dimension=32)
    words = ["psu", "gpu", "ram", "ssd", "fan", "cable", "case", "cpu", "fanless"]
    stores_checked = 0
    while stores_checked < 100:
        n = rng.randint(1, 1000)
        entries = []
        for i in range(n):
            text = " ".join(rng.choices(words, k=rng.randint(1, 5)))
            entries.append(
                (Chunk(f"d{rng.randint(0, 9)}", i, text, 0, len(text)), emb.embed(text))
            )
        store = VectorStore(entries, dimension=32)
        for _, vec in store.entries:
            assert abs(float(np.linalg.norm(vec.array())) - 1.0) < 1e-6
        query = emb.embed(" ".join(rng.choices(words, k=3)))
        k = rng.randint(1, 8)
        got = search_topk(store, query, k)
        scored = []
        for chunk, vec in entries:
            dot = math.fsum(a * b for a, b in zip(vec.values, query.values))
            scored.append((chunk, dot))
        scored.sort(key=lambda p: (-round(p[1], 9), p[0].doc_id, p[0].seq))
        assert [c for c, _ in got] == [c for c, _ in scored[: min(k, n)]]
        stores_checked += 1

    rng2 = random.Random(3)
    for _ in range(40):
        text = "".join(rng2.choice("ab cd\nxyz ") for _ in range(rng2.randint(0, 1500)))
        size = rng2.randint(32, 400)
        overlap = rng2.randint(0, 31)
        chunks = chunk_text("d", text, size=size, overlap=overlap)
        if not text:
            assert chunks == []
            continue
        rebuilt = chunks[0].text
        for prev, cur in zip(chunks, chunks[1:]):
            rebuilt += cur.text[prev.char_end - cur.char_start :]
        assert rebuilt == text
        for chunk in chunks:
            assert chunk.text == text[chunk.char_start : chunk.char_end]
    crit.finish()


def test_round_trips(corpus_graph):
    crit = _Criterion("round trips: JSON graph identity and query print/parse identity", None)
    blob = export_graph(corpus_graph, ExportFormat.JSON)
    again = import_graph(blob, ExportFormat.JSON)
    assert graphs_equal(corpus_graph, again)
    assert export_graph(again, ExportFormat.JSON) == blob

    rng = random.Random(12)
    for _ in range(10):
        graph = random_graph(rng, max_nodes=120)
        data = export_graph(graph, ExportFormat.JSON)
        back = import_graph(data, ExportFormat.JSON)
        assert graphs_equal(graph, back)
        assert export_graph(back, ExportFormat.JSON) == data

    fixed_queries = [
        "MATCH (n:Component) WHERE n.name CONTAINS '3050' AND "
        "n.project_name CONTAINS 'M70t Gen5' RETURN n.original_rule",
        "MATCH (a)-[e:SHOULD_NOT]->(b) RETURN a.name, b.name LIMIT 4",
        "MATCH (a)<-[x]-(b) WHERE NOT (a.owner = '' OR b.category STARTS WITH 'v') "
        "RETURN a, x, b.rule_index",
    ]
    for text in fixed_queries:
        ast = parse_query(text)
        assert parse_query(print_query(ast)) == ast
    for _ in range(200):
        graph = random_graph(rng, max_nodes=8)
        ast = random_query(rng, graph)
        assert parse_query(print_query(ast)) == ast
    crit.finish()
