"""Compatibility reasoning: recommend components, validate configurations,
and explain conflicts, all over an immutable graph snapshot.

Recommendation is one-hop: candidates are Should-neighbors (either
direction) of the selected set, scored by their number of distinct
supporting rules; any ShouldNot link to a selected node disqualifies a
candidate outright.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from .errors import UsageError
from .graph import ComponentNode, Direction, Graph, Polarity
from .ingest import DeriveRule, RuleAst, SelectRule


@dataclass(frozen=True)
class Configuration:
    project_name: str
    selected: frozenset[str]

    @classmethod
    def of(cls, project_name: str, node_ids: Iterable[str]) -> "Configuration":
        return cls(project_name=project_name, selected=frozenset(node_ids))


@dataclass(frozen=True)
class Recommendation:
    candidate: ComponentNode
    score: int
    supporting_rules: tuple[int, ...]
    conflicting_rules: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "candidate": self.candidate.to_json(),
            "score": self.score,
            "supporting_rules": list(self.supporting_rules),
            "conflicting_rules": list(self.conflicting_rules),
        }


class ViolationKind(Enum):
    SHOULD_NOT_EDGE = "ShouldNotEdge"
    MISSING_DERIVE = "MissingDerive"
    GROUP_CARDINALITY = "GroupCardinality"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    involved: tuple[str, ...]
    rule_index: int
    message: str

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "involved": list(self.involved),
            "rule_index": self.rule_index,
            "message": self.message,
        }


def _check_config(graph: Graph, config: Configuration) -> None:
    for node_id in config.selected:
        node = graph.node(node_id)  # raises NotFoundError on unknown ids
        if node.project_name != config.project_name:
            raise UsageError(
                f"selected node {node_id} belongs to project "
                f"{node.project_name!r}, not {config.project_name!r}"
            )


def recommend_for(
    graph: Graph, config: Configuration, target_category: str | None = None
) -> list[Recommendation]:
    """Rank unselected one-hop Should-neighbors of the selected set.

    A candidate with any ShouldNot edge to a selected node is excluded, as is
    anything already selected. Score is the number of distinct rules whose
    Should edges link the candidate to the selection; ties break by name.
    """
    _check_config(graph, config)
    support: dict[str, set[int]] = {}
    excluded: set[str] = set()
    for node_id in sorted(config.selected):
        for edge, neighbor in graph.neighbors(node_id, direction=Direction.BOTH):
            if neighbor.id in config.selected:
                continue
            if edge.polarity is Polarity.SHOULD_NOT:
                excluded.add(neighbor.id)
            else:
                support.setdefault(neighbor.id, set()).add(edge.provenance_rule_index)
    out: list[Recommendation] = []
    for candidate_id, rules in support.items():
        if candidate_id in excluded:
            continue
        candidate = graph.node(candidate_id)
        if target_category is not None and candidate.category.lower() != target_category.lower():
            continue
        out.append(
            Recommendation(
                candidate=candidate,
                score=len(rules),
                supporting_rules=tuple(sorted(rules)),
            )
        )
    out.sort(key=lambda r: (-r.score, r.candidate.name, r.candidate.project_name))
    return out


def _resolve_ref(graph: Graph, display_name: str, project_name: str) -> str | None:
    node = graph.node_by_key(display_name, project_name)
    return node.id if node else None


def validate_config(
    graph: Graph, rules: Sequence[RuleAst] | None, config: Configuration
) -> list[Violation]:
    """Check a selection against every rule class.

    Emits ShouldNotEdge for forbidden pairs that are both selected,
    MissingDerive when a derive rule's antecedent disjunction is satisfied
    but its consequent is unselected, and GroupCardinality when a select
    group's {min,max} bound is violated. When ``rules`` is None the derive
    and group structure is reconstructed from the graph (each antecedent edge
    then counts as an independent alternative).
    """
    _check_config(graph, config)
    violations: list[Violation] = []

    for edge in graph.edges:
        if (
            edge.polarity is Polarity.SHOULD_NOT
            and edge.src in config.selected
            and edge.dst in config.selected
        ):
            src = graph.node(edge.src)
            dst = graph.node(edge.dst)
            violations.append(
                Violation(
                    kind=ViolationKind.SHOULD_NOT_EDGE,
                    involved=(edge.src, edge.dst),
                    rule_index=edge.provenance_rule_index,
                    message=f"{src.name!r} must not be combined with {dst.name!r}",
                )
            )

    if rules is None:
        derive_items = _derives_from_graph(graph)
        group_items = [
            (g.rule_index, g.category, g.cardinality, list(g.member_ids))
            for g in graph.groups
        ]
    else:
        derive_items = []
        group_items = []
        for ast in rules:
            project = ast.source.project_name
            if isinstance(ast, DeriveRule):
                alternatives = [
                    [
                        _resolve_ref(graph, ref.display_name, project)
                        for ref in conjunction
                    ]
                    for conjunction in ast.antecedents
                ]
                consequent = _resolve_ref(graph, ast.consequent.display_name, project)
                derive_items.append(
                    (ast.source.rule_index, alternatives, consequent,
                     ast.consequent.display_name)
                )
            elif isinstance(ast, SelectRule):
                members = [
                    _resolve_ref(graph, ref.display_name, project)
                    for ref in ast.members
                ]
                group_items.append(
                    (
                        ast.source.rule_index,
                        ast.category,
                        ast.cardinality,
                        [m for m in members if m is not None],
                    )
                )

    for rule_index, alternatives, consequent_id, consequent_name in derive_items:
        satisfied = None
        for conjunction in alternatives:
            if conjunction and all(
                ref_id is not None and ref_id in config.selected
                for ref_id in conjunction
            ):
                satisfied = [ref_id for ref_id in conjunction]
                break
        if satisfied is None:
            continue
        if consequent_id is not None and consequent_id in config.selected:
            continue
        involved = tuple(satisfied) + (
            (consequent_id,) if consequent_id is not None else ()
        )
        violations.append(
            Violation(
                kind=ViolationKind.MISSING_DERIVE,
                involved=involved,
                rule_index=rule_index,
                message=f"selection requires {consequent_name!r}",
            )
        )

    for rule_index, category, cardinality, member_ids in group_items:
        lo, hi = cardinality.bounds
        chosen = [m for m in member_ids if m in config.selected]
        if lo <= len(chosen) <= hi:
            continue
        involved = tuple(chosen) if chosen else tuple(member_ids)
        violations.append(
            Violation(
                kind=ViolationKind.GROUP_CARDINALITY,
                involved=involved,
                rule_index=rule_index,
                message=(
                    f"group {category!r} requires between {lo} and {hi} "
                    f"selected member(s), found {len(chosen)}"
                ),
            )
        )

    violations.sort(key=lambda v: (v.rule_index, v.kind.value, v.involved))
    return violations


def _derives_from_graph(graph: Graph):
    """Singleton-alternative derive structure recovered from Should edges.

    Conjunctions cannot be reconstructed from edges alone, so every edge of a
    derive-typed rule is treated as an independent alternative. Exact for
    every rule whose antecedent list is a plain disjunction.
    """
    grouped: dict[tuple[int, str], list[str]] = {}
    for edge in graph.edges:
        if edge.polarity is not Polarity.SHOULD:
            continue
        dst = graph.node(edge.dst)
        if dst.rule_type.value != "Derive":
            continue
        grouped.setdefault((edge.provenance_rule_index, edge.dst), []).append(edge.src)
    return [
        (rule_index, [[src] for src in sorted(srcs)], dst_id, graph.node(dst_id).name)
        for (rule_index, dst_id), srcs in sorted(grouped.items())
    ]


def conflicts_for(graph: Graph, node_id: str) -> list[tuple[ComponentNode, int]]:
    """Every node linked by a ShouldNot edge in either direction, with the
    rule index that forbids the pairing."""
    return [
        (neighbor, edge.provenance_rule_index)
        for edge, neighbor in graph.neighbors(
            node_id, polarity=Polarity.SHOULD_NOT, direction=Direction.BOTH
        )
    ]


Explainable = Union[Violation, Recommendation, Sequence[Violation]]


def explain(graph: Graph, item: Explainable) -> str:
    """Human-readable rendering of a violation, recommendation, or violation
    list; names every involved component and quotes the defining rule text."""
    if isinstance(item, Violation):
        return _explain_violation(graph, item)
    if isinstance(item, Recommendation):
        return _explain_recommendation(graph, item)
    violations = list(item)
    if not violations:
        return "configuration valid"
    return "\n".join(_explain_violation(graph, v) for v in violations)


def _rule_quote(graph: Graph, rule_index: int, near: Iterable[str]) -> str:
    for node_id in near:
        node = graph.node(node_id)
        if node.rule_index == rule_index:
            return node.original_rule
    for node in sorted(graph.nodes, key=lambda n: (n.name, n.project_name)):
        if node.rule_index == rule_index:
            return node.original_rule
    return ""


def _explain_violation(graph: Graph, violation: Violation) -> str:
    names = [graph.node(i).name for i in violation.involved]
    polarity = (
        "should not"
        if violation.kind is ViolationKind.SHOULD_NOT_EDGE
        else "should"
    )
    quote = _rule_quote(graph, violation.rule_index, violation.involved)
    text = (
        f"[rule {violation.rule_index}] {violation.message} "
        f"(components: {', '.join(names)}; polarity: {polarity})"
    )
    if quote:
        text += f'; rule text: "{quote}"'
    return text


def _explain_recommendation(graph: Graph, rec: Recommendation) -> str:
    quote = _rule_quote(graph, rec.supporting_rules[0], [rec.candidate.id]) if rec.supporting_rules else ""
    text = (
        f"{rec.candidate.name} is recommended (should-pair with your selection; "
        f"supported by {rec.score} rule(s): "
        f"{', '.join(str(r) for r in rec.supporting_rules)})"
    )
    if quote:
        text += f'; rule text: "{quote}"'
    return text
