"""compatkg: component-compatibility rules as a queryable knowledge graph.

Ingest delimited rule files into a property graph of components linked by
Should / ShouldNot edges, query it with a small read-only graph query
language, derive recommendations and configuration checks, and answer
natural-language questions through a pluggable (mockable) language model
with a document-retrieval fallback.
"""

from .errors import (
    CompatKgError,
    ConsistencyError,
    DocumentParseError,
    NoGraphError,
    NotFoundError,
    QuerySyntaxError,
    QueryValidationError,
    ReadOnlyViolation,
    RuleParseError,
    SchemaError,
    TransportError,
    UsageError,
)
from .gateway import (
    AgentMode,
    ChatTurn,
    Gazetteer,
    KeywordSet,
    SchemaSummary,
    Trace,
    chat_turn,
    compose_answer,
    describe_schema,
    extract_keywords,
    generate_structured_query,
)
from .graph import (
    Cardinality,
    CompatEdge,
    ComponentNode,
    Direction,
    Graph,
    GraphBatch,
    GraphStats,
    Polarity,
    RuleType,
    SelectGroup,
    build_graph,
    node_id_for,
)
from .graphio import ExportFormat, export_graph, graphs_equal, import_graph
from .ingest import (
    AttributePredicate,
    ComponentRef,
    Connective,
    DeriveRule,
    InputFormat,
    ParseStage,
    QuarantinedRule,
    RawRuleRecord,
    RuleAst,
    SelectRule,
    TextRule,
    compile_rules,
    load_records,
    normalize_rule_text,
    parse_derive_rule,
    parse_rule,
    parse_rules,
    parse_select_rule,
    parse_text_rule,
    serialize_ast,
    split_compound_rule,
)
from .llm import HttpLlmClient, LlmMessage, LlmRequest, LlmResponse, MockLlmClient
from .query import (
    QueryAst,
    ResultTable,
    assert_readonly,
    execute_query,
    keyword_template_query,
    parse_query,
    print_query,
)
from .recommend import (
    Configuration,
    Recommendation,
    Violation,
    ViolationKind,
    conflicts_for,
    explain,
    recommend_for,
    validate_config,
)
from .retrieval import (
    Chunk,
    EmbeddingVector,
    HttpEmbedder,
    LocalEmbedder,
    VectorStore,
    answer_from_docs,
    build_store,
    chunk_text,
    embed_text,
    search_topk,
)
from .service import ServiceState, create_app

__version__ = "0.1.0"
