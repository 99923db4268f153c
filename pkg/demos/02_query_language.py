"""The read-only graph query language.

Parses a few queries against the fixture graph, prints their result
tables, and shows the guardrails: syntax diagnostics with positions and
the write-clause rejection.
"""

from pathlib import Path

from compatkg import (
    InputFormat,
    ReadOnlyViolation,
    QuerySyntaxError,
    assert_readonly,
    build_graph,
    compile_rules,
    execute_query,
    load_records,
    parse_query,
    parse_rules,
)

ROOT = Path(__file__).resolve().parents[1]
records, _ = load_records((ROOT / "fixtures" / "rules_fixture.tsv").read_bytes(), InputFormat.TSV)
asts, _ = parse_rules(records)
graph = build_graph(compile_rules(asts))

queries = [
    "MATCH (n:Component) WHERE n.name CONTAINS '3050' AND "
    "n.project_name CONTAINS 'M70t Gen5' RETURN n.name, n.original_rule",
    "MATCH (a)-[e:SHOULD_NOT]->(b) RETURN a.name, b.name",
    "MATCH (n) WHERE n.category = 'PSU' RETURN n.name LIMIT 3",
]
for text in queries:
    print(f"\n>>> {text}")
    table = execute_query(parse_query(text), graph)
    print("    " + " | ".join(table.columns))
    for row in table.rows:
        print("    " + " | ".join(cell[:60] for cell in row))
    print(f"    ({len(table.rows)} rows)")

print("\nguardrails:")
try:
    parse_query("MATCH (n RETURN n")
except QuerySyntaxError as exc:
    print(f"  syntax error with position: {exc}")
try:
    assert_readonly("MATCH (n) DELETE n")
except ReadOnlyViolation as exc:
    print(f"  write clause rejected: {exc}")
assert_readonly("MATCH (n) WHERE n.name CONTAINS 'DELETE' RETURN n")
print("  ...but the word inside a string literal is fine")
