"""From a raw rule file to a compatibility graph.

Loads the bundled 50-row rule corpus, shows what survives each stage
(loading, parsing, compilation), and exports the result in three formats.
"""

from pathlib import Path

from compatkg import (
    ExportFormat,
    InputFormat,
    build_graph,
    compile_rules,
    export_graph,
    load_records,
    parse_rules,
)

ROOT = Path(__file__).resolve().parents[1]

raw = (ROOT / "fixtures" / "rules_fixture.tsv").read_bytes()
records, load_quarantine = load_records(raw, InputFormat.TSV)
print(f"loaded {len(records)} records; {len(load_quarantine)} rows quarantined at load:")
for item in load_quarantine:
    print(f"  - {item.reason}")

asts, parse_quarantine = parse_rules(records)
print(f"\nparsed {len(asts)} rules; {len(parse_quarantine)} quarantined while parsing:")
for item in parse_quarantine:
    print(f"  - rule {item.source.rule_index}: {item.reason}")

graph = build_graph(compile_rules(asts))
stats = graph.stats()
print(f"\ngraph: {stats.node_count} nodes, {stats.edge_count} edges")
print(f"  nodes by defining rule type: {stats.nodes_by_rule_type}")
print(f"  edges by polarity:           {stats.edges_by_polarity}")

print("\nsample should / should-not pairs:")
for edge in graph.edges[:6]:
    src, dst = graph.node(edge.src), graph.node(edge.dst)
    arrow = "--should-->" if edge.polarity.value == "Should" else "--should-NOT-->"
    print(f"  {src.name} {arrow} {dst.name}   (rule {edge.provenance_rule_index})")

out_dir = ROOT / "demos" / "out"
out_dir.mkdir(exist_ok=True)
for fmt, suffix in [
    (ExportFormat.JSON, "json"),
    (ExportFormat.GRAPHML, "graphml"),
    (ExportFormat.CSV_PAIR, "zip"),
]:
    path = out_dir / f"graph.{suffix}"
    path.write_bytes(export_graph(graph, fmt))
    print(f"wrote {path.relative_to(ROOT)} ({path.stat().st_size} bytes)")
