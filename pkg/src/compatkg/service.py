"""HTTP service exposing chat, query, recommend, validate and graph reads.

All reads hit an immutable graph snapshot held in ServiceState; re-ingestion
publishes a new snapshot by atomic replacement, so concurrent readers see
either the old or the new graph, never a mixture. Every response body is
JSON, including every error (a fixed ApiError code/status mapping).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import gateway, recommend
from .errors import (
    CompatKgError,
    NoGraphError,
    NotFoundError,
    QuerySyntaxError,
    QueryValidationError,
    ReadOnlyViolation,
    TransportError,
    UsageError,
)
from .graph import Direction, Graph, Polarity
from .ingest import RuleAst
from .llm import LlmClient, MockLlmClient
from .query import execute_query, parse_query
from .retrieval import Embedder, LocalEmbedder, VectorStore


class ApiCode(Enum):
    BAD_REQUEST = ("BadRequest", 400)
    NOT_FOUND = ("NotFound", 404)
    NO_GRAPH = ("NoGraph", 409)
    UPSTREAM = ("Upstream", 502)
    INTERNAL = ("Internal", 500)

    @property
    def label(self) -> str:
        return self.value[0]

    @property
    def status(self) -> int:
        return self.value[1]


@dataclass(frozen=True)
class ApiError(Exception):
    code: ApiCode
    message: str


class ServiceState:
    """Mutable holder publishing immutable snapshots.

    Snapshot replacement is a single attribute assignment, which is atomic
    under the interpreter lock; readers grab the reference once per request.
    """

    def __init__(
        self,
        graph: Graph | None = None,
        rules: list[RuleAst] | None = None,
        doc_store: VectorStore | None = None,
        llm_client: LlmClient | None = None,
        embedder: Embedder | None = None,
    ):
        self.graph = graph
        self.rules = rules
        self.doc_store = doc_store
        self.llm_client = llm_client or MockLlmClient([])
        self.embedder = embedder or LocalEmbedder()

    def publish(self, graph: Graph, rules: list[RuleAst] | None = None) -> None:
        self.rules = rules
        self.graph = graph

    def require_graph(self) -> Graph:
        graph = self.graph
        if graph is None:
            raise ApiError(ApiCode.NO_GRAPH, "no graph loaded; ingest rules first")
        return graph


class ChatBody(BaseModel):
    question: str
    mode: str = "GraphAgent"


class QueryBody(BaseModel):
    query: str


class RecommendBody(BaseModel):
    selected: list[str]
    category: Optional[str] = None


class ValidateBody(BaseModel):
    selected: list[str]


def _error_response(code: ApiCode, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=code.status, content={"code": code.label, "message": message}
    )


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="compatkg", docs_url=None, redoc_url=None)
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[os.environ.get("UI_ORIGIN", "*")],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError):
        return _error_response(exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(_: Request, exc: RequestValidationError):
        return _error_response(ApiCode.BAD_REQUEST, str(exc.errors()[:1]))

    @app.exception_handler(CompatKgError)
    async def handle_domain_error(_: Request, exc: CompatKgError):
        return _error_response(_map_code(exc), str(exc))

    @app.exception_handler(Exception)
    async def handle_unexpected(_: Request, exc: Exception):
        return _error_response(ApiCode.INTERNAL, f"{type(exc).__name__}: {exc}")

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "graph_loaded": state.graph is not None}

    @app.post("/chat")
    async def chat(body: ChatBody):
        try:
            mode = gateway.AgentMode(body.mode)
        except ValueError:
            raise ApiError(ApiCode.BAD_REQUEST, f"unknown mode {body.mode!r}")
        graph = state.graph
        if mode is gateway.AgentMode.GRAPH and graph is None:
            raise ApiError(ApiCode.NO_GRAPH, "no graph loaded; ingest rules first")
        turn = gateway.chat_turn(
            body.question,
            mode,
            graph,
            state.llm_client,
            doc_store=state.doc_store,
            embedder=state.embedder,
        )
        return turn.to_json()

    @app.post("/query")
    async def query(body: QueryBody):
        graph = state.require_graph()
        ast = parse_query(body.query)
        table = execute_query(ast, graph)
        return table.to_json()

    @app.post("/recommend")
    async def recommend_endpoint(body: RecommendBody):
        graph = state.require_graph()
        config = _config_for(graph, body.selected)
        recs = recommend.recommend_for(graph, config, body.category)
        return {"recommendations": [r.to_json() for r in recs]}

    @app.post("/validate")
    async def validate_endpoint(body: ValidateBody):
        graph = state.require_graph()
        config = _config_for(graph, body.selected)
        violations = recommend.validate_config(graph, state.rules, config)
        return {
            "violations": [v.to_json() for v in violations],
            "valid": not violations,
        }

    @app.get("/graph/stats")
    async def stats():
        return state.require_graph().stats().to_json()

    @app.get("/graph/nodes/{node_id}/neighbors")
    async def neighbors(node_id: str, polarity: str = "", direction: str = "both"):
        graph = state.require_graph()
        pol: Polarity | None = None
        if polarity:
            try:
                pol = {
                    "should": Polarity.SHOULD,
                    "should_not": Polarity.SHOULD_NOT,
                }[polarity.lower()]
            except KeyError:
                raise ApiError(ApiCode.BAD_REQUEST, f"unknown polarity {polarity!r}")
        try:
            dir_ = Direction(direction.lower())
        except ValueError:
            raise ApiError(ApiCode.BAD_REQUEST, f"unknown direction {direction!r}")
        pairs = graph.neighbors(node_id, polarity=pol, direction=dir_)
        return {
            "node": graph.node(node_id).to_json(),
            "neighbors": [
                {"edge": edge.to_json(), "node": node.to_json()} for edge, node in pairs
            ],
        }

    return app


def _config_for(graph: Graph, selected: list[str]) -> recommend.Configuration:
    if not selected:
        raise ApiError(ApiCode.BAD_REQUEST, "selected must not be empty")
    project = None
    for node_id in selected:
        node = graph.node(node_id)  # NotFoundError -> 404 via _map_code
        project = project or node.project_name
    return recommend.Configuration.of(project or "", selected)


def _map_code(exc: CompatKgError) -> ApiCode:
    if isinstance(exc, NotFoundError):
        return ApiCode.NOT_FOUND
    if isinstance(exc, NoGraphError):
        return ApiCode.NO_GRAPH
    if isinstance(exc, TransportError):
        return ApiCode.UPSTREAM
    if isinstance(
        exc, (QuerySyntaxError, QueryValidationError, ReadOnlyViolation, UsageError)
    ):
        return ApiCode.BAD_REQUEST
    return ApiCode.INTERNAL
