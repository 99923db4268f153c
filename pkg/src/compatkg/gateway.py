"""Natural-language gateway: keywords, query generation, and chat turns.

The trust anchor is a deterministic gazetteer matcher over the active
graph's node and project names; the language model is asked first for a
structured query, each invalid reply is retried with the parser diagnostic
attached, and after the attempt budget the keyword template query takes
over. Every turn records a full trace (keywords, query, attempts, fallback).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import CompatKgError, NoGraphError, TransportError
from .errors import QuerySyntaxError, QueryValidationError, ReadOnlyViolation
from .graph import ComponentNode, Graph
from .llm import LlmClient, LlmMessage, LlmRequest
from .query import (
    ResultTable,
    assert_readonly,
    execute_query,
    keyword_template_query,
    parse_query,
)
from .retrieval import Embedder, VectorStore, answer_from_docs

ATTEMPT_LIMIT = 3
KEYWORD_STOPLIST = frozenset({"t3", "rule", "about"})
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")
_MAX_NGRAM = 3
# Shorter spans ("me", "is") are substrings of almost any lexicon and would
# drown the real keys, so gazetteer matching starts at trigram length.
_MIN_MATCH_LEN = 3


class AgentMode(Enum):
    GRAPH = "GraphAgent"
    DOC = "DocAgent"


@dataclass(frozen=True)
class KeywordSet:
    name_keys: tuple[str, ...] = ()
    project_keys: tuple[str, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.name_keys and not self.project_keys

    def to_json(self) -> dict:
        return {"name_keys": list(self.name_keys), "project_keys": list(self.project_keys)}


@dataclass(frozen=True)
class Gazetteer:
    """Lowercased lexicon of known component and project names."""

    names: tuple[str, ...]
    projects: tuple[str, ...]

    @classmethod
    def from_graph(cls, graph: Graph) -> "Gazetteer":
        names = sorted({n.name.lower() for n in graph.nodes})
        projects = sorted({n.project_name.lower() for n in graph.nodes if n.project_name})
        return cls(names=tuple(names), projects=tuple(projects))


def build_gazetteer(graph: Graph) -> Gazetteer:
    return Gazetteer.from_graph(graph)


def extract_keywords(question: str, gazetteer: Gazetteer) -> KeywordSet:
    """Deterministic keyword extraction against the graph lexicon.

    Token n-grams (n <= 3) occurring as case-insensitive substrings of a
    gazetteer entry become keys, longest non-overlapping span first; entries
    found among project names classify as project keys, all others as name
    keys. Tokens containing a run of 3+ digits additionally contribute that
    run as a name key. Stoplisted keys are dropped.
    """
    tokens = _TOKEN_RE.findall(question)
    used: set[int] = set()
    name_keys: list[str] = []
    project_keys: list[str] = []

    def add(target: list[str], key: str) -> None:
        if key.lower() not in (k.lower() for k in name_keys + project_keys):
            target.append(key)

    for n in range(_MAX_NGRAM, 0, -1):
        for i in range(0, len(tokens) - n + 1):
            span = range(i, i + n)
            if any(j in used for j in span):
                continue
            candidate = " ".join(tokens[i : i + n])
            if len(candidate) < _MIN_MATCH_LEN or candidate.lower() in KEYWORD_STOPLIST:
                continue
            lowered = candidate.lower()
            if any(lowered in entry for entry in gazetteer.projects):
                add(project_keys, candidate)
                used.update(span)
            elif any(lowered in entry for entry in gazetteer.names):
                add(name_keys, candidate)
                used.update(span)

    for token in tokens:
        runs = re.findall(r"\d+", token)
        if not runs:
            continue
        run = max(runs, key=len)
        if len(run) >= 3 and run.lower() not in KEYWORD_STOPLIST:
            add(name_keys, run)

    return KeywordSet(name_keys=tuple(name_keys), project_keys=tuple(project_keys))


@dataclass(frozen=True)
class SchemaSummary:
    properties: tuple[str, ...]
    gazetteer: Gazetteer

    def prompt_block(self) -> str:
        return (
            "Nodes carry the label Component and the string properties: "
            + ", ".join(self.properties)
            + ". Relationships are typed SHOULD or SHOULD_NOT."
        )


def describe_schema(graph: Graph) -> SchemaSummary:
    return SchemaSummary(
        properties=ComponentNode.PROPERTIES, gazetteer=Gazetteer.from_graph(graph)
    )


QUERY_GRAMMAR_PROMPT = """\
Translate the user's question into exactly one query in this restricted
graph query language and reply with the query text only, no explanation:

  MATCH (v:Component) [-[e:SHOULD|:SHOULD_NOT]-> (w:Component)] [WHERE cond]
  RETURN item, item, ... [LIMIT n]

  cond := cond AND cond | cond OR cond | NOT cond | (cond)
        | v.prop CONTAINS 'text' | v.prop = 'text' | v.prop STARTS WITH 'text'

{schema}

The language is read-only: never emit CREATE, DELETE, SET, MERGE, REMOVE or
DROP. String matching is case-insensitive substring for CONTAINS."""


class FallbackUnavailable(CompatKgError):
    """Query generation failed and no keywords exist to fall back on."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class GenerationResult:
    query_text: str
    attempts: int
    fallback_used: bool
    keywords: KeywordSet


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        lines = [l for l in text.splitlines() if not l.strip().startswith("```")]
        text = "\n".join(lines).strip()
    return text


def generate_structured_query(
    question: str, schema_summary: SchemaSummary, llm_client: LlmClient
) -> GenerationResult:
    """Ask the model for a query, validating and retrying before falling back.

    Each reply must pass the read-only guard and the parser; a rejection is
    fed back as a diagnostic for up to three total attempts, after which the
    deterministic keyword template query is used (fallback_used=True). With
    no keywords either, raises FallbackUnavailable so the caller can switch
    to document retrieval.
    """
    keywords = extract_keywords(question, schema_summary.gazetteer)
    messages: list[LlmMessage] = [
        LlmMessage(
            "system",
            QUERY_GRAMMAR_PROMPT.format(schema=schema_summary.prompt_block()),
        ),
        LlmMessage("user", question),
    ]
    attempts = 0
    while attempts < ATTEMPT_LIMIT:
        attempts += 1
        try:
            response = llm_client.complete(
                LlmRequest(messages=tuple(messages), temperature=0.0)
            )
        except TransportError:
            break
        candidate = _strip_fences(response.content)
        try:
            assert_readonly(candidate)
            parse_query(candidate)
            return GenerationResult(
                query_text=candidate,
                attempts=attempts,
                fallback_used=False,
                keywords=keywords,
            )
        except (ReadOnlyViolation, QuerySyntaxError, QueryValidationError) as exc:
            messages.append(LlmMessage("assistant", response.content))
            messages.append(
                LlmMessage(
                    "user",
                    f"That query is invalid: {exc}. Reply with one corrected query only.",
                )
            )
    if keywords.is_empty:
        raise FallbackUnavailable(
            "query generation failed and the question contains no known keywords",
            attempts=attempts,
        )
    return GenerationResult(
        query_text=keyword_template_query(keywords),
        attempts=attempts,
        fallback_used=True,
        keywords=keywords,
    )


def compose_answer(
    question: str, table: ResultTable, llm_client: LlmClient | None = None
) -> str:
    """Summarize a result table as prose; the table itself always ships too.

    Template mode (the default) is deterministic: row count, the distinct
    project names, and a pointer to the attached table. LLM mode sends the
    question plus at most 50 table rows for a free-form summary.
    """
    if llm_client is None:
        if not table.rows:
            return "There are no matching rules for this question."
        parts = [f"Found {len(table.rows)} matching rule row(s)."]
        project_columns = [
            i for i, c in enumerate(table.columns) if c.endswith("project_name")
        ]
        if project_columns:
            projects = sorted({row[project_columns[0]] for row in table.rows})
            parts.append("Projects: " + ", ".join(projects) + ".")
        parts.append("Details are in the attached table.")
        return " ".join(parts)
    capped = {
        "columns": list(table.columns),
        "rows": [list(r) for r in table.rows[:50]],
    }
    response = llm_client.complete(
        LlmRequest(
            messages=(
                LlmMessage(
                    "system",
                    "Summarize the tabular rule data for the user; stay factual.",
                ),
                LlmMessage(
                    "user",
                    f"Question: {question}\nTable: {json.dumps(capped, sort_keys=True)}",
                ),
            ),
            temperature=0.0,
        )
    )
    return response.content


@dataclass(frozen=True)
class Trace:
    keywords: KeywordSet | None = None
    generated_query: str | None = None
    attempts: int = 0
    fallback_used: bool = False
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "keywords": self.keywords.to_json() if self.keywords else None,
            "generated_query": self.generated_query,
            "attempts": self.attempts,
            "fallback_used": self.fallback_used,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ChatTurn:
    question: str
    mode: AgentMode
    answer: str
    table: ResultTable | None = None
    trace: Trace = field(default_factory=Trace)

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "mode": self.mode.value,
            "answer": self.answer,
            "table": self.table.to_json() if self.table is not None else None,
            "trace": self.trace.to_json(),
        }

    def serialize(self) -> bytes:
        return (json.dumps(self.to_json(), sort_keys=True) + "\n").encode("utf-8")


def chat_turn(
    question: str,
    mode: AgentMode,
    graph: Graph | None,
    llm_client: LlmClient,
    doc_store: VectorStore | None = None,
    embedder: Embedder | None = None,
    compose_with_llm: bool = False,
) -> ChatTurn:
    """Run one question through the selected agent pipeline.

    GraphAgent: extract keywords, generate and validate a query, execute it,
    compose the answer; the full trace is recorded. When generation fails
    with no keyword fallback the turn degrades to DocAgent with a note.
    DocAgent: answer from the vector store. With a scripted mock client a
    turn is a pure function of (question, graph, script).
    """
    if mode is AgentMode.GRAPH:
        if graph is None:
            raise NoGraphError("no graph snapshot loaded; run ingestion first")
        schema = describe_schema(graph)
        try:
            generated = generate_structured_query(question, schema, llm_client)
        except FallbackUnavailable as exc:
            degraded = chat_turn(
                question,
                AgentMode.DOC,
                graph,
                llm_client,
                doc_store=doc_store,
                embedder=embedder,
                compose_with_llm=compose_with_llm,
            )
            trace = Trace(
                keywords=KeywordSet(),
                attempts=exc.attempts,
                notes=(
                    "no keywords matched the graph lexicon; degraded to DocAgent",
                ),
            )
            return ChatTurn(
                question=question,
                mode=AgentMode.DOC,
                answer=degraded.answer,
                table=None,
                trace=trace,
            )
        assert_readonly(generated.query_text)
        table = execute_query(parse_query(generated.query_text), graph)
        answer = compose_answer(
            question, table, llm_client if compose_with_llm else None
        )
        trace = Trace(
            keywords=generated.keywords,
            generated_query=generated.query_text,
            attempts=generated.attempts,
            fallback_used=generated.fallback_used,
        )
        return ChatTurn(
            question=question,
            mode=AgentMode.GRAPH,
            answer=answer,
            table=table,
            trace=trace,
        )

    if doc_store is None or len(doc_store) == 0:
        return ChatTurn(
            question=question,
            mode=AgentMode.DOC,
            answer="no documents indexed",
            trace=Trace(),
        )
    if embedder is None:
        raise NoGraphError("document mode needs an embedder")
    doc_answer = answer_from_docs(
        question,
        doc_store,
        embedder,
        llm_client=llm_client if compose_with_llm else None,
    )
    return ChatTurn(
        question=question,
        mode=AgentMode.DOC,
        answer=doc_answer.answer,
        trace=Trace(notes=tuple(json.dumps(c, sort_keys=True) for c in doc_answer.citations)),
    )
