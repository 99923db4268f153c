"""Recommendation and configuration validation.

Builds a configuration around the RTX 3050 card, asks for power supplies,
then deliberately breaks the configuration and shows the violations with
their explanations.
"""

from pathlib import Path

from compatkg import (
    Configuration,
    InputFormat,
    build_graph,
    compile_rules,
    conflicts_for,
    explain,
    load_records,
    node_id_for,
    parse_rules,
    recommend_for,
    validate_config,
)

ROOT = Path(__file__).resolve().parents[1]
PROJECT = "ThinkCentre M70T Gen5"

records, _ = load_records((ROOT / "fixtures" / "rules_fixture.tsv").read_bytes(), InputFormat.TSV)
asts, _ = parse_rules([r for r in records if r.project_name == PROJECT])
graph = build_graph(compile_rules(asts))

rtx = node_id_for("RTX 3050 GPU", PROJECT)
es = node_id_for("ES Chassis", PROJECT)
small_psu = node_id_for("180w 85% PSU", PROJECT)

config = Configuration.of(PROJECT, [rtx, es])
print("selection: RTX 3050 GPU + ES Chassis")
print("\nPSU recommendations (the 180w unit is vetoed by a should-not rule):")
for rec in recommend_for(graph, config, target_category="PSU"):
    print(f"  {rec.candidate.name}  score={rec.score}  rules={list(rec.supporting_rules)}")

print("\nconflicts recorded against the RTX 3050 GPU:")
for node, rule_index in conflicts_for(graph, rtx):
    print(f"  {node.name}  (rule {rule_index})")

bad = Configuration.of(PROJECT, [rtx, small_psu])
print("\nforcing the 180w PSU in anyway and validating:")
violations = validate_config(graph, asts, bad)
for violation in violations:
    print(f"  [{violation.kind.value}] {explain(graph, violation)}")
print(f"\nvalid configuration? {'yes' if not violations else 'no'}")
