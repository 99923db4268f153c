"""Embedded in-memory property graph of components and polarity edges.

A Graph is an immutable snapshot: building or importing produces a new
object, readers share snapshots freely. Substring lookup over the name and
project columns is backed by a lowercase trigram index whose correctness is
defined by plain linear-scan semantics.
"""

from __future__ import annotations

import datetime as dt
import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import ConsistencyError, NotFoundError, QueryValidationError


class RuleType(Enum):
    TEXT_RULE = "TextRule"
    DERIVE = "Derive"
    SELECT = "Select"


class Polarity(Enum):
    SHOULD = "Should"
    SHOULD_NOT = "ShouldNot"


class Cardinality(Enum):
    EXACTLY_ONE = "ExactlyOne"
    ZERO_OR_ONE = "ZeroOrOne"

    @property
    def bounds(self) -> tuple[int, int]:
        return (1, 1) if self is Cardinality.EXACTLY_ONE else (0, 1)


class Direction(Enum):
    OUT = "out"
    IN = "in"
    BOTH = "both"


def node_id_for(name: str, project_name: str) -> str:
    """Stable node id derived from the identity key (name, project)."""
    digest = hashlib.sha1(f"{name}\x1f{project_name}".encode("utf-8")).hexdigest()
    return f"c{digest[:12]}"


@dataclass(frozen=True)
class ComponentNode:
    id: str
    name: str
    original_rule: str
    rule_index: int
    rule_type: RuleType
    project_name: str
    date: dt.date
    owner: str
    category: str

    PROPERTIES = (
        "id",
        "name",
        "original_rule",
        "rule_index",
        "rule_type",
        "project_name",
        "date",
        "owner",
        "category",
    )

    def prop(self, name: str) -> str:
        """String view of one property, as used by queries and filters."""
        if name not in ComponentNode.PROPERTIES:
            raise QueryValidationError(f"unknown node property: {name}")
        value = getattr(self, name)
        if isinstance(value, RuleType):
            return value.value
        if isinstance(value, dt.date):
            return value.isoformat()
        return str(value)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "original_rule": self.original_rule,
            "rule_index": self.rule_index,
            "rule_type": self.rule_type.value,
            "project_name": self.project_name,
            "date": self.date.isoformat(),
            "owner": self.owner,
            "category": self.category,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ComponentNode":
        return cls(
            id=str(obj["id"]),
            name=str(obj["name"]),
            original_rule=str(obj["original_rule"]),
            rule_index=int(obj["rule_index"]),
            rule_type=RuleType(obj["rule_type"]),
            project_name=str(obj["project_name"]),
            date=dt.date.fromisoformat(str(obj["date"])),
            owner=str(obj["owner"]),
            category=str(obj["category"]),
        )


@dataclass(frozen=True)
class CompatEdge:
    src: str
    dst: str
    polarity: Polarity
    provenance_rule_index: int

    def to_json(self) -> dict:
        return {
            "src": self.src,
            "dst": self.dst,
            "polarity": self.polarity.value,
            "provenance_rule_index": self.provenance_rule_index,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CompatEdge":
        return cls(
            src=str(obj["src"]),
            dst=str(obj["dst"]),
            polarity=Polarity(obj["polarity"]),
            provenance_rule_index=int(obj["provenance_rule_index"]),
        )


@dataclass(frozen=True)
class SelectGroup:
    category: str
    cardinality: Cardinality
    member_ids: tuple[str, ...]
    rule_index: int

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "cardinality": self.cardinality.value,
            "member_ids": list(self.member_ids),
            "rule_index": self.rule_index,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SelectGroup":
        return cls(
            category=str(obj["category"]),
            cardinality=Cardinality(obj["cardinality"]),
            member_ids=tuple(str(m) for m in obj["member_ids"]),
            rule_index=int(obj["rule_index"]),
        )


@dataclass(frozen=True)
class GraphBatch:
    nodes: tuple[ComponentNode, ...] = ()
    edges: tuple[CompatEdge, ...] = ()
    groups: tuple[SelectGroup, ...] = ()


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    nodes_by_rule_type: dict[str, int]
    edges_by_polarity: dict[str, int]

    def to_json(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "nodes_by_rule_type": dict(sorted(self.nodes_by_rule_type.items())),
            "edges_by_polarity": dict(sorted(self.edges_by_polarity.items())),
        }


_TRIGRAM_FIELDS = ("name", "project_name")


def _trigrams(text: str) -> set[str]:
    lowered = text.lower()
    return {lowered[i : i + 3] for i in range(len(lowered) - 2)}


class Graph:
    """Immutable snapshot of components, edges and select groups."""

    def __init__(
        self,
        nodes: Sequence[ComponentNode],
        edges: Sequence[CompatEdge],
        groups: Sequence[SelectGroup] = (),
    ):
        self._nodes: dict[str, ComponentNode] = {n.id: n for n in nodes}
        self._edges: tuple[CompatEdge, ...] = tuple(edges)
        self._groups: tuple[SelectGroup, ...] = tuple(groups)
        self._out: dict[str, list[int]] = {}
        self._in: dict[str, list[int]] = {}
        for idx, edge in enumerate(self._edges):
            self._out.setdefault(edge.src, []).append(idx)
            self._in.setdefault(edge.dst, []).append(idx)
        self._trigram_index: dict[tuple[str, str], set[str]] = {}
        for node in self._nodes.values():
            for fname in _TRIGRAM_FIELDS:
                for tri in _trigrams(getattr(node, fname)):
                    self._trigram_index.setdefault((fname, tri), set()).add(node.id)

    # -- basic access ------------------------------------------------------

    @property
    def nodes(self) -> tuple[ComponentNode, ...]:
        return tuple(self._nodes.values())

    @property
    def edges(self) -> tuple[CompatEdge, ...]:
        return self._edges

    @property
    def groups(self) -> tuple[SelectGroup, ...]:
        return self._groups

    def node(self, node_id: str) -> ComponentNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NotFoundError(f"no node with id {node_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node_by_key(self, name: str, project_name: str) -> ComponentNode | None:
        return self._nodes.get(node_id_for(name, project_name))

    # -- queries -----------------------------------------------------------

    def find_nodes(self, predicates: Sequence[tuple[str, str]]) -> list[ComponentNode]:
        """Nodes satisfying every case-insensitive CONTAINS predicate.

        ``predicates`` is a list of (attribute, needle) pairs; an empty list
        matches everything. Results are sorted by (name, project_name).
        """
        for attribute, _ in predicates:
            if attribute not in ComponentNode.PROPERTIES:
                raise QueryValidationError(f"unknown node property: {attribute}")
        candidates: set[str] | None = None
        for attribute, needle in predicates:
            if attribute in _TRIGRAM_FIELDS and len(needle) >= 3:
                ids: set[str] | None = None
                for tri in _trigrams(needle):
                    posting = self._trigram_index.get((attribute, tri), set())
                    ids = posting.copy() if ids is None else ids & posting
                candidates = ids if candidates is None else candidates & (ids or set())
                if not candidates:
                    return []
        pool: Iterable[ComponentNode] = (
            self._nodes.values()
            if candidates is None
            else (self._nodes[i] for i in candidates)
        )
        out = [
            node
            for node in pool
            if all(
                needle.lower() in node.prop(attribute).lower()
                for attribute, needle in predicates
            )
        ]
        out.sort(key=lambda n: (n.name, n.project_name))
        return out

    def neighbors(
        self,
        node_id: str,
        polarity: Polarity | None = None,
        direction: Direction = Direction.BOTH,
    ) -> list[tuple[CompatEdge, ComponentNode]]:
        """Adjacent (edge, neighbor) pairs, ordered by neighbor name."""
        self.node(node_id)
        indexes: list[int] = []
        if direction in (Direction.OUT, Direction.BOTH):
            indexes.extend(self._out.get(node_id, []))
        if direction in (Direction.IN, Direction.BOTH):
            indexes.extend(self._in.get(node_id, []))
        pairs: list[tuple[CompatEdge, ComponentNode]] = []
        seen: set[tuple[int, str]] = set()
        for idx in indexes:
            edge = self._edges[idx]
            other_id = edge.dst if edge.src == node_id else edge.src
            if polarity is not None and edge.polarity is not polarity:
                continue
            key = (idx, other_id)
            if key in seen:  # self-loop reached from both adjacency lists
                continue
            seen.add(key)
            pairs.append((edge, self._nodes[other_id]))
        pairs.sort(
            key=lambda p: (p[1].name, p[1].project_name, p[0].polarity.value, p[0].src)
        )
        return pairs

    def stats(self) -> GraphStats:
        by_type: dict[str, int] = {}
        for node in self._nodes.values():
            by_type[node.rule_type.value] = by_type.get(node.rule_type.value, 0) + 1
        by_polarity: dict[str, int] = {}
        for edge in self._edges:
            by_polarity[edge.polarity.value] = by_polarity.get(edge.polarity.value, 0) + 1
        return GraphStats(
            node_count=len(self._nodes),
            edge_count=len(self._edges),
            nodes_by_rule_type=by_type,
            edges_by_polarity=by_polarity,
        )

    def check_integrity(self) -> None:
        """Raise ConsistencyError if any edge endpoint is unresolved."""
        offenders = sorted(
            {
                endpoint
                for edge in self._edges
                for endpoint in (edge.src, edge.dst)
                if endpoint not in self._nodes
            }
            | {
                member
                for group in self._groups
                for member in group.member_ids
                if member not in self._nodes
            }
        )
        if offenders:
            raise ConsistencyError(
                f"{len(offenders)} id(s) referenced but not defined: "
                + ", ".join(offenders),
                offenders=offenders,
            )


def build_graph(batch: GraphBatch) -> Graph:
    """Build an immutable snapshot from a batch.

    Duplicate node ids keep their first-seen attributes, duplicate
    (src, dst, polarity) edges collapse to the first occurrence, and any edge
    or group member pointing at a missing node is a fatal consistency error.
    """
    nodes: dict[str, ComponentNode] = {}
    for node in batch.nodes:
        nodes.setdefault(node.id, node)
    edges: dict[tuple[str, str, Polarity], CompatEdge] = {}
    for edge in batch.edges:
        edges.setdefault((edge.src, edge.dst, edge.polarity), edge)
    graph = Graph(tuple(nodes.values()), tuple(edges.values()), batch.groups)
    graph.check_integrity()
    return graph
