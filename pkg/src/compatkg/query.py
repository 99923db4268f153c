"""Read-only graph query language: parse, validate, print and execute.

The grammar is a small Cypher-style subset, case-insensitive keywords:

    MATCH (v[:Component]) [-[e[:SHOULD|:SHOULD_NOT]]-> (w[:Component])]
        [WHERE cond] RETURN item {, item} [LIMIT n]

    cond := cond AND cond | cond OR cond | NOT cond | (cond)
          | v.prop CONTAINS 'lit' | v.prop = 'lit' | v.prop STARTS WITH 'lit'

One relationship hop may also be written `<-[...]-` (reversed) or `-[...]-`
(either direction). String comparisons are case-insensitive. Execution
enumerates pattern bindings over an immutable snapshot, filters, projects,
sorts rows by their projected values and applies LIMIT.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

from .errors import QuerySyntaxError, QueryValidationError, ReadOnlyViolation
from .graph import ComponentNode, Direction, Graph, Polarity

WRITE_KEYWORDS = ("CREATE", "DELETE", "SET", "MERGE", "REMOVE", "DROP")

NODE_LABEL = "Component"
_REL_LABELS = {"SHOULD": Polarity.SHOULD, "SHOULD_NOT": Polarity.SHOULD_NOT}


class CompareOp(Enum):
    CONTAINS = "CONTAINS"
    EQUALS = "="
    STARTS_WITH = "STARTS WITH"


@dataclass(frozen=True)
class Comparison:
    variable: str
    prop: str
    op: CompareOp
    literal: str


@dataclass(frozen=True)
class BoolOp:
    op: str  # "AND" | "OR" | "NOT"
    operands: tuple["Condition", ...]


Condition = Union[Comparison, BoolOp]


@dataclass(frozen=True)
class NodePattern:
    variable: str
    label: str | None = None


@dataclass(frozen=True)
class RelPattern:
    variable: str | None
    polarity: Polarity | None
    direction: Direction


@dataclass(frozen=True)
class Projection:
    variable: str
    prop: str | None = None

    def text(self) -> str:
        return self.variable if self.prop is None else f"{self.variable}.{self.prop}"


@dataclass(frozen=True)
class QueryAst:
    source: NodePattern
    rel: RelPattern | None = None
    dest: NodePattern | None = None
    where: Condition | None = None
    returns: tuple[Projection, ...] = ()
    limit: int | None = None


# -- lexer --------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>'(?:\\.|[^'\\])*')
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow_out>->)
  | (?P<arrow_in><-)
  | (?P<sym>[().,\[\]:=\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = match.lastgroup or ""
        value = match.group()
        if kind != "ws":
            tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = match.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


def _unquote(literal: str) -> str:
    body = literal[1:-1]
    return body.replace("\\'", "'").replace("\\\\", "\\")


def _quote(value: str) -> str:
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str) -> QuerySyntaxError:
        token = self.peek()
        return QuerySyntaxError(message, token.line, token.column)

    def at_keyword(self, word: str) -> bool:
        token = self.peek()
        return token.kind == "ident" and token.text.upper() == word

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word}")
        return self.advance()

    def expect_sym(self, sym: str) -> Token:
        token = self.peek()
        if token.text != sym:
            raise self.error(f"expected {sym!r}")
        return self.advance()

    def parse(self) -> QueryAst:
        self.expect_keyword("MATCH")
        source = self.node_pattern()
        rel = None
        dest = None
        if self.peek().text in ("-", "<-"):
            rel = self.rel_pattern()
            dest = self.node_pattern()
        where = None
        if self.at_keyword("WHERE"):
            self.advance()
            where = self.condition()
        self.expect_keyword("RETURN")
        returns = [self.projection()]
        while self.peek().text == ",":
            self.advance()
            returns.append(self.projection())
        limit = None
        if self.at_keyword("LIMIT"):
            self.advance()
            token = self.peek()
            if token.kind != "number":
                raise self.error("expected a positive integer after LIMIT")
            limit = int(self.advance().text)
            if limit < 1:
                raise self.error("LIMIT must be at least 1")
        if self.peek().kind != "eof":
            raise self.error(f"unexpected trailing input {self.peek().text!r}")
        ast = QueryAst(
            source=source,
            rel=rel,
            dest=dest,
            where=where,
            returns=tuple(returns),
            limit=limit,
        )
        _validate(ast)
        return ast

    def node_pattern(self) -> NodePattern:
        self.expect_sym("(")
        token = self.peek()
        if token.kind != "ident":
            raise self.error("expected a variable name")
        variable = self.advance().text
        label = None
        if self.peek().text == ":":
            self.advance()
            label_token = self.peek()
            if label_token.kind != "ident":
                raise self.error("expected a node label")
            label = self.advance().text
            if label.lower() != NODE_LABEL.lower():
                raise self.error(f"unknown node label {label!r}")
        self.expect_sym(")")
        return NodePattern(variable=variable, label=label)

    def rel_pattern(self) -> RelPattern:
        reversed_ = False
        if self.peek().text == "<-":
            reversed_ = True
            self.advance()
        else:
            self.expect_sym("-")
        self.expect_sym("[")
        variable = None
        if self.peek().kind == "ident":
            variable = self.advance().text
        polarity = None
        if self.peek().text == ":":
            self.advance()
            label_token = self.peek()
            if label_token.kind != "ident" or label_token.text.upper() not in _REL_LABELS:
                raise self.error("expected relationship label SHOULD or SHOULD_NOT")
            polarity = _REL_LABELS[self.advance().text.upper()]
        self.expect_sym("]")
        if reversed_:
            self.expect_sym("-")
            direction = Direction.IN
        elif self.peek().text == "->":
            self.advance()
            direction = Direction.OUT
        elif self.peek().text == "-":
            self.advance()
            direction = Direction.BOTH
        else:
            raise self.error("expected '->' or '-' after relationship pattern")
        return RelPattern(variable=variable, polarity=polarity, direction=direction)

    def condition(self) -> Condition:
        return self.or_expr()

    def or_expr(self) -> Condition:
        node = self.and_expr()
        while self.at_keyword("OR"):
            self.advance()
            node = BoolOp("OR", (node, self.and_expr()))
        return node

    def and_expr(self) -> Condition:
        node = self.not_expr()
        while self.at_keyword("AND"):
            self.advance()
            node = BoolOp("AND", (node, self.not_expr()))
        return node

    def not_expr(self) -> Condition:
        if self.at_keyword("NOT"):
            self.advance()
            return BoolOp("NOT", (self.not_expr(),))
        if self.peek().text == "(":
            self.advance()
            node = self.condition()
            self.expect_sym(")")
            return node
        return self.comparison()

    def comparison(self) -> Comparison:
        token = self.peek()
        if token.kind != "ident":
            raise self.error("expected a property comparison")
        variable = self.advance().text
        self.expect_sym(".")
        prop_token = self.peek()
        if prop_token.kind != "ident":
            raise self.error("expected a property name")
        prop = self.advance().text
        if self.at_keyword("CONTAINS"):
            self.advance()
            op = CompareOp.CONTAINS
        elif self.peek().text == "=":
            self.advance()
            op = CompareOp.EQUALS
        elif self.at_keyword("STARTS"):
            self.advance()
            self.expect_keyword("WITH")
            op = CompareOp.STARTS_WITH
        else:
            raise self.error("expected CONTAINS, = or STARTS WITH")
        literal_token = self.peek()
        if literal_token.kind != "string":
            raise self.error("expected a quoted string literal")
        literal = _unquote(self.advance().text)
        return Comparison(variable=variable, prop=prop, op=op, literal=literal)

    def projection(self) -> Projection:
        token = self.peek()
        if token.kind != "ident":
            raise self.error("expected a return item")
        variable = self.advance().text
        prop = None
        if self.peek().text == ".":
            self.advance()
            prop_token = self.peek()
            if prop_token.kind != "ident":
                raise self.error("expected a property name")
            prop = self.advance().text
        return Projection(variable=variable, prop=prop)


def _validate(ast: QueryAst) -> None:
    bound = {ast.source.variable}
    if ast.rel is not None:
        if ast.rel.variable:
            bound.add(ast.rel.variable)
        assert ast.dest is not None
        bound.add(ast.dest.variable)
    if len(bound) < (1 + (1 if ast.rel and ast.rel.variable else 0) + (1 if ast.dest else 0)):
        raise QueryValidationError("pattern variables must be distinct")

    node_vars = {ast.source.variable} | ({ast.dest.variable} if ast.dest else set())

    def check_comparison(comp: Comparison) -> None:
        if comp.variable not in bound:
            raise QueryValidationError(f"unbound variable {comp.variable!r}")
        if comp.variable not in node_vars:
            raise QueryValidationError(
                f"variable {comp.variable!r} is a relationship; only node properties "
                "can be compared"
            )
        if comp.prop not in ComponentNode.PROPERTIES:
            raise QueryValidationError(f"unknown property {comp.prop!r}")

    def walk(cond: Condition) -> None:
        if isinstance(cond, Comparison):
            check_comparison(cond)
        else:
            for operand in cond.operands:
                walk(operand)

    if ast.where is not None:
        walk(ast.where)
    for item in ast.returns:
        if item.variable not in bound:
            raise QueryValidationError(f"unbound variable {item.variable!r}")
        if item.prop is not None:
            if item.variable not in node_vars:
                raise QueryValidationError(
                    f"relationship variable {item.variable!r} has no properties"
                )
            if item.prop not in ComponentNode.PROPERTIES:
                raise QueryValidationError(f"unknown property {item.prop!r}")


def parse_query(text: str) -> QueryAst:
    """Parse and validate query text, raising on syntax or binding errors."""
    return _Parser(text).parse()


def print_query(ast: QueryAst) -> str:
    """Canonical text for an AST; parse(print(parse(q))) == parse(q)."""

    def node(pattern: NodePattern) -> str:
        label = f":{pattern.label}" if pattern.label else ""
        return f"({pattern.variable}{label})"

    def cond(c: Condition) -> str:
        if isinstance(c, Comparison):
            return f"{c.variable}.{c.prop} {c.op.value} {_quote(c.literal)}"
        # non-leaf operands are always parenthesized so the printed text
        # reparses to the identical tree regardless of associativity
        def operand(o: Condition) -> str:
            return cond(o) if isinstance(o, Comparison) else f"({cond(o)})"

        if c.op == "NOT":
            return f"NOT {operand(c.operands[0])}"
        return f" {c.op} ".join(operand(o) for o in c.operands)

    parts = ["MATCH", node(ast.source)]
    if ast.rel is not None and ast.dest is not None:
        variable = ast.rel.variable or ""
        label = ""
        if ast.rel.polarity is not None:
            label = ":SHOULD" if ast.rel.polarity is Polarity.SHOULD else ":SHOULD_NOT"
        box = f"[{variable}{label}]"
        if ast.rel.direction is Direction.OUT:
            parts.append(f"-{box}->")
        elif ast.rel.direction is Direction.IN:
            parts.append(f"<-{box}-")
        else:
            parts.append(f"-{box}-")
        parts.append(node(ast.dest))
    if ast.where is not None:
        parts.extend(["WHERE", cond(ast.where)])
    parts.append("RETURN")
    parts.append(", ".join(item.text() for item in ast.returns))
    if ast.limit is not None:
        parts.extend(["LIMIT", str(ast.limit)])
    return " ".join(parts)


# -- read-only guard -----------------------------------------------------------


def assert_readonly(query: str | QueryAst) -> None:
    """Reject write clauses appearing as keywords outside string literals."""
    if isinstance(query, QueryAst):
        return  # the grammar cannot express writes
    for token in tokenize(query):
        if token.kind == "ident" and token.text.upper() in WRITE_KEYWORDS:
            raise ReadOnlyViolation(token.text.upper())


# -- execution ------------------------------------------------------------------


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def to_json(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows]}


def _edge_cell(edge) -> str:
    return json.dumps(edge.to_json(), sort_keys=True)


def _node_cell(node: ComponentNode) -> str:
    return json.dumps(node.to_json(), sort_keys=True)


def _eval(cond: Condition, binding: dict[str, object]) -> bool:
    if isinstance(cond, Comparison):
        node = binding[cond.variable]
        assert isinstance(node, ComponentNode)
        value = node.prop(cond.prop).lower()
        literal = cond.literal.lower()
        if cond.op is CompareOp.CONTAINS:
            return literal in value
        if cond.op is CompareOp.EQUALS:
            return value == literal
        return value.startswith(literal)
    if cond.op == "NOT":
        return not _eval(cond.operands[0], binding)
    if cond.op == "AND":
        return all(_eval(o, binding) for o in cond.operands)
    return any(_eval(o, binding) for o in cond.operands)


def _bindings(ast: QueryAst, graph: Graph) -> Iterator[dict[str, object]]:
    if ast.rel is None:
        for node in graph.nodes:
            yield {ast.source.variable: node}
        return
    assert ast.dest is not None
    rel = ast.rel
    for edge in graph.edges:
        if rel.polarity is not None and edge.polarity is not rel.polarity:
            continue
        if edge.src == edge.dst:  # a self-loop binds once whatever the direction
            orientations = [(edge.src, edge.dst)]
        else:
            orientations = []
            if rel.direction in (Direction.OUT, Direction.BOTH):
                orientations.append((edge.src, edge.dst))
            if rel.direction in (Direction.IN, Direction.BOTH):
                orientations.append((edge.dst, edge.src))
        for src_id, dst_id in orientations:
            binding: dict[str, object] = {
                ast.source.variable: graph.node(src_id),
                ast.dest.variable: graph.node(dst_id),
            }
            if rel.variable:
                binding[rel.variable] = edge
            yield binding


def execute_query(ast: QueryAst, graph: Graph) -> ResultTable:
    """Run a validated read-only query over a snapshot.

    Semantics: enumerate all bindings of the MATCH pattern, keep those
    satisfying WHERE, project the RETURN items, sort rows by their projected
    values and apply LIMIT. An empty result is a normal table.
    """
    assert_readonly(ast)
    rows: list[tuple[str, ...]] = []
    for binding in _bindings(ast, graph):
        if ast.where is not None and not _eval(ast.where, binding):
            continue
        cells: list[str] = []
        for item in ast.returns:
            value = binding[item.variable]
            if item.prop is not None:
                assert isinstance(value, ComponentNode)
                cells.append(value.prop(item.prop))
            elif isinstance(value, ComponentNode):
                cells.append(_node_cell(value))
            else:
                cells.append(_edge_cell(value))
        rows.append(tuple(cells))
    rows.sort()
    if ast.limit is not None:
        rows = rows[: ast.limit]
    return ResultTable(
        columns=tuple(item.text() for item in ast.returns), rows=tuple(rows)
    )


# -- keyword template ------------------------------------------------------------

TEMPLATE_RETURN = (
    "n.name, n.original_rule, n.project_name, n.category, n.owner, n.date"
)


def keyword_template_query(keywords) -> str:
    """Canonical keyword-search query over name and project_name.

    Raises ValueError on an empty keyword set; callers treat that as the
    signal to fall back to document retrieval.
    """
    predicates = [f"n.name CONTAINS {_quote(k)}" for k in keywords.name_keys]
    predicates += [
        f"n.project_name CONTAINS {_quote(k)}" for k in keywords.project_keys
    ]
    if not predicates:
        raise ValueError("keyword set is empty")
    return (
        f"MATCH (n:{NODE_LABEL}) WHERE "
        + " AND ".join(predicates)
        + f" RETURN {TEMPLATE_RETURN}"
    )
