"""Shared test machinery: random instance generators and independent oracles.

The oracles deliberately re-derive semantics from scratch (full cross
products, per-rule evaluation) instead of reusing engine code paths.
"""

from __future__ import annotations

import datetime as dt
import json
import random

from compatkg.graph import (
    Cardinality,
    CompatEdge,
    ComponentNode,
    Graph,
    GraphBatch,
    Polarity,
    RuleType,
    SelectGroup,
    build_graph,
    node_id_for,
)
from compatkg.query import (
    BoolOp,
    CompareOp,
    Comparison,
    Direction,
    NodePattern,
    Projection,
    QueryAst,
    RelPattern,
)

NAME_WORDS = [
    "RTX3050", "A310", "UHD730", "PSU", "180w", "260w", "Base", "Cable",
    "DDR5", "UDIMM", "Monitor", "SSD", "HDD", "Keyboard", "Mouse", "WLAN",
]
PROJECTS = ["ThinkCentre M70T Gen5", "YTM400RR", "M90a Pro"]
CATEGORIES = ["VA", "PSU", "SP", "MECH", "OSL"]


def make_node(
    node_id: str,
    name: str,
    project: str = "P1",
    category: str = "VA",
    rule_index: int = 0,
    rule_type: RuleType = RuleType.SELECT,
    original_rule: str = "",
    owner: str = "",
    date: dt.date = dt.date(2024, 3, 22),
) -> ComponentNode:
    return ComponentNode(
        id=node_id,
        name=name,
        original_rule=original_rule or f"rule body for {name}",
        rule_index=rule_index,
        rule_type=rule_type,
        project_name=project,
        date=date,
        owner=owner,
        category=category,
    )


def random_graph(rng: random.Random, max_nodes: int = 200, max_edges: int | None = None) -> Graph:
    n = rng.randint(1, max_nodes)
    nodes = []
    for i in range(n):
        words = rng.sample(NAME_WORDS, rng.randint(1, 3))
        name = " ".join(words) + f" #{i}"
        project = rng.choice(PROJECTS)
        nodes.append(
            make_node(
                node_id_for(name, project),
                name,
                project=project,
                category=rng.choice(CATEGORIES),
                rule_index=rng.randint(0, 60),
                rule_type=rng.choice(list(RuleType)),
                date=dt.date(2024, rng.randint(1, 12), rng.randint(1, 28)),
                owner=rng.choice(["", "owner1", "owner2"]),
            )
        )
    if max_edges is None:
        max_edges = min(3 * n, n * max(1, n - 1))
    edges: dict[tuple[str, str, Polarity], CompatEdge] = {}
    for _ in range(rng.randint(0, max_edges)):
        a, b = rng.choice(nodes), rng.choice(nodes)
        if a.id == b.id:
            continue
        pol = rng.choice(list(Polarity))
        key = (a.id, b.id, pol)
        if key not in edges:
            edges[key] = CompatEdge(a.id, b.id, pol, rng.randint(0, 60))
    groups = []
    if n >= 3 and rng.random() < 0.5:
        members = tuple(x.id for x in rng.sample(nodes, rng.randint(2, min(4, n))))
        groups.append(
            SelectGroup(
                category=rng.choice(CATEGORIES),
                cardinality=rng.choice(list(Cardinality)),
                member_ids=members,
                rule_index=rng.randint(0, 60),
            )
        )
    return build_graph(
        GraphBatch(nodes=tuple(nodes), edges=tuple(edges.values()), groups=tuple(groups))
    )


# -- random query generation ---------------------------------------------------

_PROPS = ["name", "project_name", "category", "owner", "rule_type", "rule_index"]


def _random_literal(rng: random.Random, graph: Graph) -> str:
    if graph.nodes and rng.random() < 0.7:
        node = rng.choice(graph.nodes)
        value = node.prop(rng.choice(_PROPS))
        if value:
            start = rng.randint(0, max(0, len(value) - 1))
            end = min(len(value), start + rng.randint(1, 8))
            return value[start:end]
    return rng.choice(["3050", "PSU", "zzz", "M70t", "'quoted'", "a"])


def _random_condition(rng: random.Random, graph: Graph, variables: list[str], depth: int):
    if depth <= 0 or rng.random() < 0.5:
        return Comparison(
            variable=rng.choice(variables),
            prop=rng.choice(_PROPS),
            op=rng.choice(list(CompareOp)),
            literal=_random_literal(rng, graph),
        )
    op = rng.choice(["AND", "OR", "NOT"])
    if op == "NOT":
        return BoolOp("NOT", (_random_condition(rng, graph, variables, depth - 1),))
    return BoolOp(
        op,
        (
            _random_condition(rng, graph, variables, depth - 1),
            _random_condition(rng, graph, variables, depth - 1),
        ),
    )


def random_query(rng: random.Random, graph: Graph) -> QueryAst:
    hop = rng.random() < 0.5
    source = NodePattern("a", "Component" if rng.random() < 0.5 else None)
    rel = None
    dest = None
    variables = ["a"]
    if hop:
        rel = RelPattern(
            variable="e" if rng.random() < 0.5 else None,
            polarity=rng.choice([None, Polarity.SHOULD, Polarity.SHOULD_NOT]),
            direction=rng.choice(list(Direction)),
        )
        dest = NodePattern("b", "Component" if rng.random() < 0.3 else None)
        variables.append("b")
    where = None
    if rng.random() < 0.8:
        where = _random_condition(rng, graph, variables, rng.randint(0, 2))
    proj_vars = list(variables)
    if rel is not None and rel.variable:
        proj_vars.append(rel.variable)
    returns = []
    for _ in range(rng.randint(1, 3)):
        var = rng.choice(proj_vars)
        if var == "e":
            returns.append(Projection("e"))
        elif rng.random() < 0.8:
            returns.append(Projection(var, rng.choice(_PROPS)))
        else:
            returns.append(Projection(var))
    limit = rng.randint(1, 12) if rng.random() < 0.3 else None
    return QueryAst(
        source=source, rel=rel, dest=dest, where=where, returns=tuple(returns), limit=limit
    )


# -- brute-force query oracle ----------------------------------------------------


def _oracle_eval(cond, binding) -> bool:
    if isinstance(cond, Comparison):
        value = binding[cond.variable].prop(cond.prop).lower()
        needle = cond.literal.lower()
        if cond.op is CompareOp.CONTAINS:
            return needle in value
        if cond.op is CompareOp.EQUALS:
            return value == needle
        return value.startswith(needle)
    if cond.op == "NOT":
        return not _oracle_eval(cond.operands[0], binding)
    results = [_oracle_eval(o, binding) for o in cond.operands]
    return all(results) if cond.op == "AND" else any(results)


def edge_pair_index(graph: Graph) -> dict[tuple[str, str], list[CompatEdge]]:
    """(src id, dst id) -> directed edges, for the quadratic oracle."""
    index: dict[tuple[str, str], list[CompatEdge]] = {}
    for edge in graph.edges:
        index.setdefault((edge.src, edge.dst), []).append(edge)
    return index


def oracle_execute(ast: QueryAst, graph: Graph, pair_index=None):
    """Quadratic enumerate-every-node-pair implementation of query semantics."""
    if pair_index is None:
        pair_index = edge_pair_index(graph)
    bindings = []
    if ast.rel is None:
        bindings = [{ast.source.variable: node} for node in graph.nodes]
    else:
        for src in graph.nodes:
            for dst in graph.nodes:
                candidates: list[CompatEdge] = []
                if ast.rel.direction in (Direction.OUT, Direction.BOTH):
                    candidates += pair_index.get((src.id, dst.id), [])
                if ast.rel.direction in (Direction.IN, Direction.BOTH):
                    backwards = pair_index.get((dst.id, src.id), [])
                    if src.id == dst.id and ast.rel.direction is Direction.BOTH:
                        backwards = []  # self-loop already counted going out
                    candidates += backwards
                for edge in candidates:
                    if ast.rel.polarity is not None and edge.polarity is not ast.rel.polarity:
                        continue
                    binding = {ast.source.variable: src, ast.dest.variable: dst}
                    if ast.rel.variable:
                        binding[ast.rel.variable] = edge
                    bindings.append(binding)
    rows = []
    for binding in bindings:
        if ast.where is not None and not _oracle_eval(ast.where, binding):
            continue
        cells = []
        for item in ast.returns:
            value = binding[item.variable]
            if item.prop is not None:
                cells.append(value.prop(item.prop))
            elif isinstance(value, ComponentNode):
                cells.append(json.dumps(value.to_json(), sort_keys=True))
            else:
                cells.append(json.dumps(value.to_json(), sort_keys=True))
        rows.append(tuple(cells))
    rows.sort()
    if ast.limit is not None:
        rows = rows[: ast.limit]
    columns = tuple(item.text() for item in ast.returns)
    return columns, rows


# -- exhaustive recommender oracle -------------------------------------------------


def oracle_recommend(graph: Graph, selected: set[str], category: str | None):
    """Test every node against every edge, straight from the definitions."""
    results = []
    for node in graph.nodes:
        if node.id in selected:
            continue
        if category is not None and node.category.lower() != category.lower():
            continue
        supporting = set()
        vetoed = False
        for edge in graph.edges:
            touches = (
                (edge.src == node.id and edge.dst in selected)
                or (edge.dst == node.id and edge.src in selected)
            )
            if not touches:
                continue
            if edge.polarity is Polarity.SHOULD_NOT:
                vetoed = True
            else:
                supporting.add(edge.provenance_rule_index)
        if supporting and not vetoed:
            results.append((node.id, len(supporting), tuple(sorted(supporting))))
    name_of = {n.id: n for n in graph.nodes}
    results.sort(
        key=lambda r: (-r[1], name_of[r[0]].name, name_of[r[0]].project_name)
    )
    return results


def oracle_validate(graph: Graph, rules, selected: set[str]):
    """Per-definition re-evaluation of all three violation kinds.

    Returns a set of (kind, involved, rule_index) triples; rule structure is
    taken from the given ASTs exactly as the engine receives them.
    """
    from compatkg.ingest import DeriveRule, SelectRule

    found = set()
    for edge in graph.edges:
        if (
            edge.polarity is Polarity.SHOULD_NOT
            and edge.src in selected
            and edge.dst in selected
        ):
            found.add(("ShouldNotEdge", (edge.src, edge.dst), edge.provenance_rule_index))
    for ast in rules:
        project = ast.source.project_name
        if isinstance(ast, DeriveRule):
            consequent_id = node_id_for(ast.consequent.display_name, project)
            if not graph.has_node(consequent_id):
                consequent_id = None
            hit = None
            for conjunction in ast.antecedents:
                ids = [node_id_for(r.display_name, project) for r in conjunction]
                if ids and all(i in selected for i in ids):
                    hit = ids
                    break
            if hit is None:
                continue
            if consequent_id is not None and consequent_id in selected:
                continue
            involved = tuple(hit) + ((consequent_id,) if consequent_id else ())
            found.add(("MissingDerive", involved, ast.source.rule_index))
        elif isinstance(ast, SelectRule):
            ids = [
                node_id_for(r.display_name, project)
                for r in ast.members
            ]
            ids = [i for i in ids if graph.has_node(i)]
            chosen = [i for i in ids if i in selected]
            lo, hi = ast.cardinality.bounds
            if not (lo <= len(chosen) <= hi):
                involved = tuple(chosen) if chosen else tuple(dict.fromkeys(ids))
                found.add(("GroupCardinality", involved, ast.source.rule_index))
    return found


# -- random rule generation (for validate_config acceptance) ------------------------


def random_rules(rng: random.Random, graph: Graph):
    """Derive and select rules referencing graph nodes by their display names."""
    from compatkg.ingest import ComponentRef, DeriveRule, RawRuleRecord, SelectRule

    by_project: dict[str, list[ComponentNode]] = {}
    for node in graph.nodes:
        by_project.setdefault(node.project_name, []).append(node)
    rules = []
    next_index = 100
    for project, members in by_project.items():
        for _ in range(rng.randint(0, 3)):
            next_index += 1
            record = RawRuleRecord(
                rule_index=next_index,
                summary="generated",
                category=rng.choice(CATEGORIES),
                rule_body="generated",
                rule_type=rng.choice([RuleType.DERIVE, RuleType.SELECT]),
                project_name=project,
                version="0.1",
                date=dt.date(2024, 1, 1),
                owner="",
            )
            if record.rule_type is RuleType.DERIVE and len(members) >= 2:
                consequent = rng.choice(members)
                alternatives = tuple(
                    tuple(
                        ComponentRef(display_name=n.name)
                        for n in rng.sample(members, rng.randint(1, min(2, len(members))))
                    )
                    for _ in range(rng.randint(1, 3))
                )
                rules.append(
                    DeriveRule(
                        consequent=ComponentRef(display_name=consequent.name),
                        antecedents=alternatives,
                        source=record,
                    )
                )
            else:
                chosen = rng.sample(members, rng.randint(1, min(4, len(members))))
                rules.append(
                    SelectRule(
                        category=record.category,
                        cardinality=rng.choice(list(Cardinality)),
                        members=tuple(ComponentRef(display_name=n.name) for n in chosen),
                        source=record,
                    )
                )
    return rules


# -- independent compile oracles ------------------------------------------------------


def oracle_name_project_pairs(asts) -> set[tuple[str, str]]:
    """Dedup script: walk every AST and collect the (name, project) node keys."""
    from compatkg.ingest import (
        SELECT_ATTRIBUTE,
        ComponentRef,
        DeriveRule,
        SelectRule,
        TextRule,
    )

    pairs = set()
    for ast in asts:
        project = ast.source.project_name
        if isinstance(ast, SelectRule):
            for m in ast.members:
                pairs.add((m.display_name, project))
        elif isinstance(ast, DeriveRule):
            pairs.add((ast.consequent.display_name, project))
            for conj in ast.antecedents:
                for ref in conj:
                    pairs.add((ref.display_name, project))
        elif isinstance(ast, TextRule):
            for leaf in ast.condition.leaves():
                if leaf.attribute == SELECT_ATTRIBUTE:
                    pairs.add((leaf.value, project))
                else:
                    pairs.add((f"{leaf.attribute}={leaf.value}", project))
            for target in ast.targets:
                if isinstance(target, ComponentRef):
                    pairs.add((target.display_name, project))
                else:
                    pairs.add((f"{target.attribute}={target.value}", project))
    return pairs


def oracle_edge_set(asts) -> set[tuple[str, str, str, str]]:
    """Dedup script: expected (src name, dst name, polarity, project) edges."""
    from compatkg.ingest import (
        SELECT_ATTRIBUTE,
        ComponentRef,
        DeriveRule,
        TextRule,
    )

    edges = set()
    for ast in asts:
        project = ast.source.project_name
        if isinstance(ast, DeriveRule):
            for conj in ast.antecedents:
                for ref in conj:
                    edges.add(
                        (ref.display_name, ast.consequent.display_name, "Should", project)
                    )
        elif isinstance(ast, TextRule):
            sources = [
                leaf.value
                if leaf.attribute == SELECT_ATTRIBUTE
                else f"{leaf.attribute}={leaf.value}"
                for leaf in ast.condition.leaves()
            ]
            targets = [
                t.display_name
                if isinstance(t, ComponentRef)
                else f"{t.attribute}={t.value}"
                for t in ast.targets
            ]
            for src in sources:
                for dst in targets:
                    edges.add((src, dst, ast.polarity.value, project))
    return edges


# -- scripted chat corpus (end-to-end determinism) ---------------------------------------


def scripted_mock_rules() -> list[dict]:
    return [
        {
            "match": "GFX3050",
            "response": (
                "MATCH (n:Component) WHERE n.name CONTAINS '3050' AND "
                "n.project_name CONTAINS 'M70t Gen5' RETURN n.name, "
                "n.original_rule, n.project_name, n.category, n.owner, n.date"
            ),
        },
        {
            "match": "power supply",
            "response": (
                "MATCH (n:Component) WHERE n.category = 'PSU' "
                "RETURN n.name, n.original_rule LIMIT 10"
            ),
        },
        {
            "match": "",
            "response": "MATCH (n:Component) RETURN n.name, n.project_name LIMIT 25",
        },
    ]


def scripted_questions(graph: Graph, count: int = 100):
    from compatkg.gateway import AgentMode

    rng = random.Random(1001)
    names = sorted({n.name for n in graph.nodes if "=" not in n.name})
    templates = [
        "Tell me the GFX3050 T3 rule about M70t Gen5.",
        "Please recommend me the power supply about GFX 3050.",
        "What rules mention {name}?",
        "Is {name} compatible with my setup?",
        "Show everything for {name} in YTM400RR",
    ]
    questions = []
    for i in range(count):
        template = templates[i % len(templates)]
        question = template.format(name=rng.choice(names))
        mode = AgentMode.DOC if i % 10 == 9 else AgentMode.GRAPH
        questions.append((question, mode))
    return questions
