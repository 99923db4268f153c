"""Rule ingestion: load raw rule rows, normalize text, and parse typed ASTs.

The pipeline is: ``load_records`` (TSV/CSV/JSONL -> RawRuleRecord) ->
``parse_rule`` per record (Select / Derive / Text-rule grammars) ->
``compile_rules`` (ASTs -> GraphBatch of nodes, edges and select groups).
Anything that fails a stage lands in a QuarantinedRule instead of being
dropped.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence, Union

from .errors import RuleParseError, SchemaError, UsageError
from .graph import (
    Cardinality,
    CompatEdge,
    ComponentNode,
    GraphBatch,
    Polarity,
    RuleType,
    SelectGroup,
    node_id_for,
)

HEADER = (
    "rule_index",
    "summary",
    "category",
    "rule_body",
    "rule_type",
    "project",
    "version",
    "date",
    "owner",
)

CHECK_MARK = "✓"

_CATALOG_CODE_RE = re.compile(r"^SBB[A-Za-z0-9]+$")
_RULE_TYPE_ALIASES = {
    "textrule": RuleType.TEXT_RULE,
    "text rule": RuleType.TEXT_RULE,
    "text-rule": RuleType.TEXT_RULE,
    "derive": RuleType.DERIVE,
    "select": RuleType.SELECT,
}


class InputFormat(Enum):
    TSV = "tsv"
    CSV = "csv"
    JSONL = "jsonl"


class ParseStage(Enum):
    NORMALIZE = "Normalize"
    SPLIT = "Split"
    PARSE = "Parse"


class Connective(Enum):
    NONE = "None"
    OR = "Or"
    AND = "And"


class Comparator(Enum):
    IS = "Is"
    IS_NOT = "IsNot"


# Reserved attribute name marking "component X is selected" condition leaves;
# compile maps these to plain component nodes instead of attribute pseudo-nodes.
SELECT_ATTRIBUTE = "select"


@dataclass(frozen=True)
class RawRuleRecord:
    rule_index: int
    summary: str
    category: str
    rule_body: str
    rule_type: RuleType
    project_name: str
    version: str
    date: dt.date
    owner: str

    def to_json(self) -> dict:
        return {
            "rule_index": self.rule_index,
            "summary": self.summary,
            "category": self.category,
            "rule_body": self.rule_body,
            "rule_type": self.rule_type.value,
            "project": self.project_name,
            "version": self.version,
            "date": self.date.isoformat(),
            "owner": self.owner,
        }


@dataclass(frozen=True)
class QuarantinedRule:
    source: Union[RawRuleRecord, str]
    reason: str
    stage: ParseStage

    def to_json(self) -> dict:
        src = (
            self.source.to_json()
            if isinstance(self.source, RawRuleRecord)
            else {"raw": self.source}
        )
        return {"reason": self.reason, "stage": self.stage.value, "source": src}


@dataclass(frozen=True)
class ComponentRef:
    display_name: str
    part_id: str | None = None


@dataclass(frozen=True)
class AttributePredicate:
    attribute: str
    value: str
    comparator: Comparator = Comparator.IS


ConditionLeaf = AttributePredicate
Target = Union[ComponentRef, AttributePredicate]


@dataclass(frozen=True)
class ConditionNode:
    """Boolean tree over attribute predicates: either a leaf or an op node."""

    op: Connective = Connective.NONE
    children: tuple["ConditionNode", ...] = ()
    leaf: ConditionLeaf | None = None

    def leaves(self) -> list[ConditionLeaf]:
        if self.leaf is not None:
            return [self.leaf]
        out: list[ConditionLeaf] = []
        for child in self.children:
            out.extend(child.leaves())
        return out


def _leaf(pred: ConditionLeaf) -> ConditionNode:
    return ConditionNode(leaf=pred)


@dataclass(frozen=True)
class SelectRule:
    category: str
    cardinality: Cardinality
    members: tuple[ComponentRef, ...]
    source: RawRuleRecord


@dataclass(frozen=True)
class DeriveRule:
    consequent: ComponentRef
    antecedents: tuple[tuple[ComponentRef, ...], ...]  # disjunction of conjunctions
    source: RawRuleRecord


@dataclass(frozen=True)
class TextRule:
    condition: ConditionNode
    polarity: Polarity
    targets: tuple[Target, ...]
    source: RawRuleRecord


RuleAst = Union[SelectRule, DeriveRule, TextRule]


# --------------------------------------------------------------------------
# Loading


def _parse_rule_type(raw: str) -> RuleType | None:
    return _RULE_TYPE_ALIASES.get(" ".join(raw.split()).lower())


def _record_from_fields(fields: Sequence[str], line_no: int) -> RawRuleRecord:
    if len(fields) != len(HEADER):
        raise ValueError(f"expected {len(HEADER)} columns, got {len(fields)}")
    raw = dict(zip(HEADER, (f.strip() for f in fields)))
    return _record_from_mapping(raw, line_no)


def _record_from_mapping(raw: dict, line_no: int) -> RawRuleRecord:
    missing = [key for key in HEADER if key not in raw]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    try:
        rule_index = int(raw["rule_index"])
    except (TypeError, ValueError):
        raise ValueError(f"rule_index {raw['rule_index']!r} is not an integer")
    if rule_index < 0:
        raise ValueError(f"rule_index {rule_index} is negative")
    rule_type = _parse_rule_type(str(raw["rule_type"]))
    if rule_type is None:
        raise ValueError(f"unknown rule_type {raw['rule_type']!r}")
    try:
        date = dt.date.fromisoformat(str(raw["date"]))
    except ValueError:
        raise ValueError(f"date {raw['date']!r} is not a valid ISO-8601 date")
    body = str(raw["rule_body"]).strip()
    if not body:
        raise ValueError("rule_body is empty")
    return RawRuleRecord(
        rule_index=rule_index,
        summary=str(raw["summary"]).strip(),
        category=str(raw["category"]).strip(),
        rule_body=body,
        rule_type=rule_type,
        project_name=str(raw["project"]).strip(),
        version=str(raw["version"]).strip(),
        date=date,
        owner=str(raw["owner"]).strip(),
    )


def load_records(
    source: bytes | io.IOBase, fmt: InputFormat
) -> tuple[list[RawRuleRecord], list[QuarantinedRule]]:
    """Read rule rows from a delimited byte stream.

    Well-formed rows become RawRuleRecords in input order; malformed rows
    (wrong column count, bad date, unknown rule_type, ...) are quarantined
    with the offending line attached. A TSV/CSV stream must start with the
    nine-column header; a missing column is a fatal SchemaError.
    """
    if isinstance(source, bytes):
        data = source
    else:
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"input is not valid UTF-8: {exc}") from exc

    if not isinstance(fmt, InputFormat):
        raise UsageError(f"unknown input format: {fmt!r}")

    records: list[RawRuleRecord] = []
    quarantined: list[QuarantinedRule] = []

    if fmt is InputFormat.JSONL:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("line is not a JSON object")
                records.append(_record_from_mapping(obj, line_no))
            except ValueError as exc:
                quarantined.append(
                    QuarantinedRule(line, f"line {line_no}: {exc}", ParseStage.NORMALIZE)
                )
        return records, quarantined

    delimiter = "\t" if fmt is InputFormat.TSV else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = list(reader)
    if not rows:
        raise SchemaError("input has no header row")
    header = tuple(cell.strip() for cell in rows[0])
    if header != HEADER:
        missing = sorted(set(HEADER) - set(header))
        if missing:
            raise SchemaError(f"header is missing column(s): {', '.join(missing)}")
        raise SchemaError(f"header columns out of order: {header}")
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            records.append(_record_from_fields(row, line_no))
        except ValueError as exc:
            quarantined.append(
                QuarantinedRule(
                    delimiter.join(row), f"line {line_no}: {exc}", ParseStage.NORMALIZE
                )
            )
    return records, quarantined


# --------------------------------------------------------------------------
# Normalization and splitting


def normalize_rule_text(text: str) -> str:
    """Clean one piece of rule text into its canonical display form.

    Collapses whitespace runs, strips check-mark glyphs, and repeatedly drops
    a trailing lone "." or a trailing single-letter token until stable, so
    near-duplicate part-name variants ("...DVI++DP.", "...DVI++DP I") merge.
    Structural connectives "||" / "&&", parentheses and bracketed catalog
    codes are preserved. Idempotent by construction (runs to a fixed point).
    """
    text = " ".join(text.replace(CHECK_MARK, " ").split())
    while True:
        if text.endswith("."):
            text = text[:-1].rstrip()
            continue
        head, _, tail = text.rpartition(" ")
        if head and len(tail) == 1 and tail.isalpha():
            text = head
            continue
        return text


def split_compound_rule(text: str) -> list[tuple[str, Connective]]:
    """Split a rule expression on top-level "||" (Or) and "&&" (And).

    Depth is tracked over parentheses and brackets; one enclosing parenthesis
    pair is stripped from the input and from each atom. The connective in
    each pair is the one *preceding* that atom (NONE for the first). Atoms
    are trimmed and must be non-empty.
    """
    s = _strip_enclosing_parens(text.strip())
    parts: list[tuple[str, Connective]] = []
    depth = 0
    start = 0
    i = 0
    pending = Connective.NONE

    def emit(chunk: str, connective: Connective, at: int) -> None:
        atom = _strip_enclosing_parens(chunk.strip())
        if not atom:
            raise RuleParseError(f"empty atom before offset {at}", offset=at)
        parts.append((atom, connective))

    while i < len(s):
        ch = s[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise RuleParseError(
                    f"unbalanced parenthesis at offset {i}", offset=i
                )
        elif depth == 0 and s.startswith("||", i):
            emit(s[start:i], pending, i)
            pending = Connective.OR
            i += 2
            start = i
            continue
        elif depth == 0 and s.startswith("&&", i):
            emit(s[start:i], pending, i)
            pending = Connective.AND
            i += 2
            start = i
            continue
        i += 1
    if depth != 0:
        raise RuleParseError(f"unbalanced parenthesis at offset {len(s)}", offset=len(s))
    emit(s[start:], pending, len(s))
    return parts


def join_atoms(parts: Iterable[tuple[str, Connective]]) -> str:
    """Inverse of split_compound_rule: re-parenthesizes compound atoms."""
    pieces: list[str] = []
    for atom, connective in parts:
        guarded = atom
        if _has_top_level_connective(atom):
            guarded = f"({atom})"
        if connective is Connective.OR:
            pieces.append(f" || {guarded}")
        elif connective is Connective.AND:
            pieces.append(f" && {guarded}")
        else:
            pieces.append(guarded)
    return "".join(pieces)


def _has_top_level_connective(text: str) -> bool:
    depth = 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif depth == 0 and (text.startswith("||", i) or text.startswith("&&", i)):
            return True
    return False


def _strip_enclosing_parens(text: str) -> str:
    while text.startswith("(") and text.endswith(")"):
        depth = 0
        enclosing = True
        for i, ch in enumerate(text):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0 and i < len(text) - 1:
                    enclosing = False
                    break
        if not enclosing:
            return text
        text = text[1:-1].strip()
    return text


def _comma_positions(text: str) -> list[int]:
    positions: list[int] = []
    depth = 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth = max(0, depth - 1)
        elif ch == "," and depth == 0:
            positions.append(i)
    return positions


def _split_top_level(text: str, separator: str) -> list[str]:
    """Split on a separator at bracket/paren depth zero."""
    parts: list[str] = []
    depth = 0
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth = max(0, depth - 1)
        elif depth == 0 and text.startswith(separator, i):
            parts.append(text[start:i])
            i += len(separator)
            start = i
            continue
        i += 1
    parts.append(text[start:])
    return parts


# --------------------------------------------------------------------------
# Grammar parsers


def component_ref(text: str) -> ComponentRef:
    """Build a ComponentRef, extracting a leading SBB catalog code if present."""
    cleaned = normalize_rule_text(text)
    first, _, rest = cleaned.partition(" ")
    if rest and _CATALOG_CODE_RE.match(first):
        return ComponentRef(display_name=rest.strip(), part_id=first)
    if not cleaned:
        raise RuleParseError("component reference is empty")
    return ComponentRef(display_name=cleaned)


_SELECT_BODY_RE = re.compile(
    r"^Group\s*--\s*(?P<card>.+?)\s+from\s*\[(?P<members>.*)\]\s*$", re.IGNORECASE
)
_RANGE_CARDINALITY_RE = re.compile(r"^(\d+)\s*-\s*(\d+)$")


def parse_select_rule(record: RawRuleRecord) -> SelectRule:
    """Parse a "Group -- <cardinality> from [members]" body."""
    match = _SELECT_BODY_RE.match(record.rule_body.strip())
    if not match:
        raise RuleParseError('select rule is missing the "Group -- ... from [...]" shape')
    phrase = match.group("card").strip()
    if phrase.lower() == "one":
        cardinality = Cardinality.EXACTLY_ONE
    elif phrase == "0-1":
        cardinality = Cardinality.ZERO_OR_ONE
    elif _RANGE_CARDINALITY_RE.match(phrase):
        # Recognized as a {min,max} range, but only One / 0-1 are supported.
        raise RuleParseError(f"unsupported cardinality range {phrase!r}")
    else:
        raise RuleParseError(f"unknown cardinality phrase {phrase!r}")
    member_text = match.group("members").strip()
    members = [
        component_ref(part)
        for part in _split_top_level(member_text, ", ")
        if part.strip()
    ]
    if not members:
        raise RuleParseError("select rule has an empty member list")
    return SelectRule(
        category=record.category,
        cardinality=cardinality,
        members=tuple(members),
        source=record,
    )


_DERIVE_SUMMARY_RE = re.compile(
    r"^(?P<name>.+?)\s+is\s+must\s+select\s+one\.?\s*$", re.IGNORECASE
)


def _top_level_paren_groups(text: str) -> list[str]:
    groups: list[str] = []
    depth = 0
    start = -1
    for i, ch in enumerate(text):
        if ch == "(":
            if depth == 0:
                start = i + 1
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise RuleParseError(f"unbalanced parenthesis at offset {i}", offset=i)
            if depth == 0:
                groups.append(text[start:i])
    if depth != 0:
        raise RuleParseError("unbalanced parenthesis", offset=len(text))
    return groups


def parse_derive_rule(record: RawRuleRecord) -> DeriveRule:
    """Parse a derive rule: consequent from the summary, antecedents from the body.

    The body is one or more parenthesized groups of check-marked items;
    adjacent groups and "||" both separate alternatives, "&&" joins items
    into one conjunction. Only check-marked items become component refs.
    """
    match = _DERIVE_SUMMARY_RE.match(record.summary.strip())
    if not match:
        raise RuleParseError(
            'derive rule summary does not name a consequent ("X is must select one")'
        )
    consequent = component_ref(match.group("name"))
    groups = _top_level_paren_groups(record.rule_body) or [record.rule_body]
    alternatives: list[tuple[ComponentRef, ...]] = []
    for group in groups:
        conjunction: list[ComponentRef] = []
        for atom, connective in split_compound_rule(group):
            if connective is not Connective.AND and conjunction:
                alternatives.append(tuple(conjunction))
                conjunction = []
            if CHECK_MARK not in atom:
                continue
            conjunction.append(component_ref(atom))
        if conjunction:
            alternatives.append(tuple(conjunction))
    if not alternatives:
        raise RuleParseError("derive rule has no check-marked antecedents")
    return DeriveRule(consequent=consequent, antecedents=tuple(alternatives), source=record)


_PREDICATE_RE = re.compile(
    r"^(?P<attr>.+?)\s+is\s+(?:(?P<neg>not)\s+)?(?P<value>.+)$", re.IGNORECASE
)
_SELECT_LEAF_RE = re.compile(r"^select\s+(?P<names>.+)$", re.IGNORECASE)
_SHOULD_BE_RE = re.compile(
    r"^(?P<attr>.+?)\s+should\s+(?P<neg>NOT\s+)?be\s+(?P<value>.+)$", re.IGNORECASE
)
_CANT_BE_RE = re.compile(
    r"^(?P<attr>.+?)\s+(?:can't|cant|can\s+not|cannot)\s+be\s+(?P<value>.+)$",
    re.IGNORECASE,
)
_SELECT_VERB_RE = re.compile(
    r"^(?:(?P<cant>can't|cant|can\s+not|cannot)|must|should\s+(?P<neg>NOT\s+)?)"
    r"\s*select\s+(?P<names>.+)$",
    re.IGNORECASE,
)
# A connective needs a preceding comma (any case) or must be upper-case on its
# own; a bare lower-case "and" is part of a value ("3.5 HDD Screw and Grommet").
_COMMA_CONNECTIVE_RE = re.compile(r",\s*(?P<conn>AND|OR)\s+", re.IGNORECASE)
_BARE_CONNECTIVE_RE = re.compile(r"\s+(?P<conn>AND|OR)\s+")


def _condition_leaf(leaf_text: str) -> ConditionNode:
    text = leaf_text.strip().strip(",")
    select = _SELECT_LEAF_RE.match(text)
    if select:
        name = normalize_rule_text(select.group("names"))
        if not name:
            raise RuleParseError("selection condition names no component")
        return _leaf(AttributePredicate(SELECT_ATTRIBUTE, name))
    pred = _PREDICATE_RE.match(text)
    if pred:
        comparator = Comparator.IS_NOT if pred.group("neg") else Comparator.IS
        attribute = normalize_rule_text(pred.group("attr"))
        value = normalize_rule_text(pred.group("value"))
        if not attribute or not value:
            raise RuleParseError(f"attribute predicate is incomplete: {text!r}")
        return _leaf(AttributePredicate(attribute, value, comparator))
    raise RuleParseError(f"unparseable condition clause: {text!r}")


def _connective_cuts(text: str) -> list[tuple[int, int, Connective]]:
    """Locate AND/OR split points at bracket depth zero, comma-aware."""
    depth = [0] * (len(text) + 1)
    level = 0
    for i, ch in enumerate(text):
        if ch in "([":
            level += 1
        elif ch in ")]":
            level = max(0, level - 1)
        depth[i + 1] = level
    cuts: list[tuple[int, int, Connective]] = []
    for regex in (_COMMA_CONNECTIVE_RE, _BARE_CONNECTIVE_RE):
        for match in regex.finditer(text):
            if depth[match.start() + 1] == 0:
                conn = (
                    Connective.AND
                    if match.group("conn").lower() == "and"
                    else Connective.OR
                )
                cuts.append((match.start(), match.end(), conn))
    cuts.sort()
    merged: list[tuple[int, int, Connective]] = []
    last_end = -1
    for start, end, conn in cuts:
        if start < last_end:  # the bare match nested inside a comma match
            continue
        merged.append((start, end, conn))
        last_end = end
    return merged


def _parse_condition(text: str) -> ConditionNode:
    clauses: list[str] = []
    connectives: list[Connective] = []
    pos = 0
    for start, end, conn in _connective_cuts(text):
        clauses.append(text[pos:start])
        connectives.append(conn)
        pos = end
    clauses.append(text[pos:])

    node: ConditionNode | None = None
    for i, clause in enumerate(clauses):
        sub = _condition_leaf(clause)
        if node is None:
            node = sub
        else:
            node = ConditionNode(connectives[i - 1], (node, sub))
    assert node is not None
    return node


def _parse_consequence(text: str) -> tuple[Polarity, tuple[Target, ...]]:
    text = text.strip().strip(".")
    if text.lower().startswith("then"):
        text = text[4:].strip()
    match = _SHOULD_BE_RE.match(text)
    if match:
        polarity = Polarity.SHOULD_NOT if match.group("neg") else Polarity.SHOULD
        target = AttributePredicate(
            normalize_rule_text(match.group("attr")),
            normalize_rule_text(match.group("value")),
        )
        return polarity, (target,)
    match = _CANT_BE_RE.match(text)
    if match:
        target = AttributePredicate(
            normalize_rule_text(match.group("attr")),
            normalize_rule_text(match.group("value")),
        )
        return Polarity.SHOULD_NOT, (target,)
    match = _SELECT_VERB_RE.match(text)
    if match:
        polarity = (
            Polarity.SHOULD_NOT
            if (match.group("cant") or match.group("neg"))
            else Polarity.SHOULD
        )
        return polarity, (component_ref(match.group("names")),)
    raise RuleParseError(f"cannot determine polarity of consequence: {text!r}")


def parse_text_rule(record: RawRuleRecord) -> TextRule:
    """Parse an IF/THEN free-text rule into predicates, polarity and targets.

    The IF clause splits on AND/OR into attribute predicates ("X is Y") or
    component selections ("select A/B"); the consequence is located after a
    "THEN" keyword or the first top-level comma. Shapes beyond these are
    deliberately rejected rather than guessed.
    """
    body = " ".join(record.rule_body.split())
    if not body.lower().startswith("if "):
        raise RuleParseError('text rule does not start with an "If" clause')
    body = body[3:]

    then_split = re.split(r",?\s*\bTHEN\b\s*", body, maxsplit=1, flags=re.IGNORECASE)
    if len(then_split) == 2:
        condition_text, consequence_text = then_split
    else:
        # No THEN keyword: the consequence starts at the first top-level comma
        # that does not introduce another AND/OR condition clause.
        connective_spans = [(s, e) for s, e, _ in _connective_cuts(body)]
        split_at = -1
        for part_end in _comma_positions(body):
            if not any(s <= part_end < e for s, e in connective_spans):
                split_at = part_end
                break
        if split_at < 0:
            raise RuleParseError("text rule is missing a THEN clause")
        condition_text = body[:split_at]
        consequence_text = body[split_at + 1 :]
    condition = _parse_condition(condition_text.strip())
    polarity, targets = _parse_consequence(consequence_text.strip())
    return TextRule(condition=condition, polarity=polarity, targets=targets, source=record)


def parse_rule(record: RawRuleRecord) -> RuleAst:
    if record.rule_type is RuleType.SELECT:
        return parse_select_rule(record)
    if record.rule_type is RuleType.DERIVE:
        return parse_derive_rule(record)
    return parse_text_rule(record)


def parse_rules(
    records: Iterable[RawRuleRecord],
) -> tuple[list[RuleAst], list[QuarantinedRule]]:
    """Parse every record; failures are quarantined, never raised."""
    asts: list[RuleAst] = []
    quarantined: list[QuarantinedRule] = []
    for record in records:
        try:
            asts.append(parse_rule(record))
        except RuleParseError as exc:
            quarantined.append(QuarantinedRule(record, str(exc), ParseStage.PARSE))
    return asts, quarantined


# --------------------------------------------------------------------------
# Compilation


def _pseudo_name(pred: AttributePredicate) -> str:
    return f"{pred.attribute}={pred.value}"


class _BatchBuilder:
    def __init__(self) -> None:
        self.nodes: dict[str, ComponentNode] = {}
        self.edges: dict[tuple[str, str, Polarity], CompatEdge] = {}
        self.groups: list[SelectGroup] = []

    def node(self, name: str, record: RawRuleRecord) -> str:
        node_id = node_id_for(name, record.project_name)
        if node_id not in self.nodes:
            self.nodes[node_id] = ComponentNode(
                id=node_id,
                name=name,
                original_rule=record.rule_body,
                rule_index=record.rule_index,
                rule_type=record.rule_type,
                project_name=record.project_name,
                date=record.date,
                owner=record.owner,
                category=record.category,
            )
        return node_id

    def component_node(self, ref: ComponentRef, record: RawRuleRecord) -> str:
        return self.node(ref.display_name, record)

    def predicate_node(self, pred: AttributePredicate, record: RawRuleRecord) -> str:
        if pred.attribute == SELECT_ATTRIBUTE:
            return self.node(pred.value, record)
        return self.node(_pseudo_name(pred), record)

    def edge(self, src: str, dst: str, polarity: Polarity, rule_index: int) -> None:
        key = (src, dst, polarity)
        if key not in self.edges:
            self.edges[key] = CompatEdge(
                src=src, dst=dst, polarity=polarity, provenance_rule_index=rule_index
            )

    def batch(self) -> GraphBatch:
        return GraphBatch(
            nodes=tuple(self.nodes.values()),
            edges=tuple(self.edges.values()),
            groups=tuple(self.groups),
        )


def compile_rules(asts: Iterable[RuleAst]) -> GraphBatch:
    """Compile parsed rules into graph nodes, polarity edges and select groups.

    One node exists per distinct (normalized name, project) pair, keeping the
    attributes of its first defining rule. Select members become sibling nodes
    plus a group record (cardinality is enforced by the recommender, so no
    member-to-member edges). Derive rules emit a Should edge per antecedent
    ref to the consequent; text rules emit condition-to-target edges with the
    rule's polarity. Every edge carries the originating rule index.
    """
    builder = _BatchBuilder()
    for ast in asts:
        record = ast.source
        if isinstance(ast, SelectRule):
            member_ids: list[str] = []
            for member in ast.members:
                member_id = builder.component_node(member, record)
                if member_id not in member_ids:
                    member_ids.append(member_id)
            builder.groups.append(
                SelectGroup(
                    category=ast.category,
                    cardinality=ast.cardinality,
                    member_ids=tuple(member_ids),
                    rule_index=record.rule_index,
                )
            )
        elif isinstance(ast, DeriveRule):
            antecedent_ids: list[str] = []
            for conjunction in ast.antecedents:
                for ref in conjunction:
                    antecedent_ids.append(builder.component_node(ref, record))
            consequent_id = builder.component_node(ast.consequent, record)
            for antecedent_id in antecedent_ids:
                builder.edge(
                    antecedent_id, consequent_id, Polarity.SHOULD, record.rule_index
                )
        elif isinstance(ast, TextRule):
            condition_ids = [
                builder.predicate_node(pred, record) for pred in ast.condition.leaves()
            ]
            target_ids = [
                builder.component_node(t, record)
                if isinstance(t, ComponentRef)
                else builder.predicate_node(t, record)
                for t in ast.targets
            ]
            for src in condition_ids:
                for dst in target_ids:
                    builder.edge(src, dst, ast.polarity, record.rule_index)
        else:  # pragma: no cover - exhaustive over RuleAst
            raise TypeError(f"unknown rule AST: {type(ast).__name__}")
    return builder.batch()


def serialize_ast(ast: RuleAst) -> dict:
    """Stable JSON form of a parsed rule, used for determinism checks."""

    def ref(r: ComponentRef) -> dict:
        return {"display_name": r.display_name, "part_id": r.part_id}

    def pred(p: AttributePredicate) -> dict:
        return {
            "attribute": p.attribute,
            "value": p.value,
            "comparator": p.comparator.value,
        }

    def condition(node: ConditionNode) -> dict:
        if node.leaf is not None:
            return {"leaf": pred(node.leaf)}
        return {"op": node.op.value, "children": [condition(c) for c in node.children]}

    base = {"rule_index": ast.source.rule_index, "project": ast.source.project_name}
    if isinstance(ast, SelectRule):
        base.update(
            kind="Select",
            category=ast.category,
            cardinality=ast.cardinality.value,
            members=[ref(m) for m in ast.members],
        )
    elif isinstance(ast, DeriveRule):
        base.update(
            kind="Derive",
            consequent=ref(ast.consequent),
            antecedents=[[ref(r) for r in conj] for conj in ast.antecedents],
        )
    else:
        base.update(
            kind="TextRule",
            condition=condition(ast.condition),
            polarity=ast.polarity.value,
            targets=[
                ref(t) if isinstance(t, ComponentRef) else pred(t) for t in ast.targets
            ],
        )
    return base
