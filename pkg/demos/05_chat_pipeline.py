"""One chat turn end to end, twice: model path and fallback path.

A scripted mock stands in for the language model, so both the happy path
(the model emits a valid query) and the repair-then-fallback path are
reproducible. The trace records keywords, the executed query, attempts
and whether the keyword fallback fired.
"""

import json
from pathlib import Path

from compatkg import (
    AgentMode,
    InputFormat,
    MockLlmClient,
    build_graph,
    chat_turn,
    compile_rules,
    load_records,
    parse_rules,
)

ROOT = Path(__file__).resolve().parents[1]
records, _ = load_records((ROOT / "fixtures" / "rules_fixture.tsv").read_bytes(), InputFormat.TSV)
asts, _ = parse_rules(records)
graph = build_graph(compile_rules(asts))

QUESTION = "Tell me the GFX3050 T3 rule about M70t Gen5."

print("=== turn 1: the scripted model answers with a valid query ===")
client = MockLlmClient.from_script(ROOT / "fixtures" / "llm_script.jsonl")
turn = chat_turn(QUESTION, AgentMode.GRAPH, graph, client)
print(turn.answer)
for row in turn.table.rows:
    print("  " + " | ".join(cell[:55] for cell in row[:2]))
print("trace:", json.dumps(turn.trace.to_json(), indent=2))

print("\n=== turn 2: the model misbehaves, the keyword fallback takes over ===")
stubborn = MockLlmClient([{"match": "", "response": "CREATE (n) RETURN n"}])
turn = chat_turn(QUESTION, AgentMode.GRAPH, graph, stubborn)
print(turn.answer)
print("attempts:", turn.trace.attempts, "| fallback_used:", turn.trace.fallback_used)
print("executed query:", turn.trace.generated_query)
