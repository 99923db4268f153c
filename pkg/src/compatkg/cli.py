"""Command-line interface: ingestion, querying, recommending, validating,
an offline chat REPL, exports, document indexing and the HTTP server.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from .errors import CompatKgError, UsageError
from .gateway import AgentMode, chat_turn
from .graphio import ExportFormat, export_graph, import_graph
from .ingest import InputFormat, compile_rules, load_records, parse_rules
from .graph import build_graph
from .llm import HttpLlmClient, MockLlmClient
from .query import ResultTable, assert_readonly, execute_query, parse_query
from .recommend import Configuration, recommend_for, validate_config
from .retrieval import LocalEmbedder, VectorStore, build_store
from .service import ServiceState, create_app


def main() -> None:
    sys.exit(run_cli_command(sys.argv[1:]))


def run_cli_command(argv, stdout=None, stderr=None, stdin=None) -> int:
    """Run one CLI invocation against explicit streams; returns the exit code."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    stdin = stdin if stdin is not None else sys.stdin
    parser = _build_parser()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        try:
            args = parser.parse_args(list(argv))
        except SystemExit as exc:
            return 0 if exc.code in (0, None) else 1
        if not hasattr(args, "handler"):
            parser.print_usage(stderr)
            return 1
        try:
            return args.handler(args, stdout, stderr, stdin) or 0
        except UsageError as exc:
            print(f"error: {exc}", file=stderr)
            return 1
        except (CompatKgError, OSError, ValueError) as exc:
            print(f"error: {exc}", file=stderr)
            return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compatkg",
        description="Component-compatibility knowledge graph toolkit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="parse a rule file and write a graph document")
    p.add_argument("--input", required=True)
    p.add_argument("--format", required=True, choices=["tsv", "csv", "jsonl"])
    p.add_argument("--out", required=True)
    p.add_argument("--quarantine")
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("query", help="run a query against a graph document")
    p.add_argument("--graph", required=True)
    p.add_argument("text", metavar="QUERY")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.set_defaults(handler=_cmd_query)

    p = sub.add_parser("recommend", help="recommend components for a selection")
    p.add_argument("--graph", required=True)
    p.add_argument("--select", required=True, help="comma-separated node ids")
    p.add_argument("--category")
    p.set_defaults(handler=_cmd_recommend)

    p = sub.add_parser("validate", help="check a selection against all rules")
    p.add_argument("--graph", required=True)
    p.add_argument("--select", required=True, help="comma-separated node ids")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("chat", help="offline chat REPL over a graph document")
    p.add_argument("--graph", required=True)
    p.add_argument("--llm", required=True, choices=["mock", "http"])
    p.add_argument("--script", help="JSONL mock script (match/response rules)")
    p.set_defaults(handler=_cmd_chat)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--graph", required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--docs", help="vector store JSON for DocAgent mode")
    p.set_defaults(handler=_cmd_serve)

    p = sub.add_parser("export", help="export a graph document to another format")
    p.add_argument("--graph", required=True)
    p.add_argument("--format", required=True, choices=["graphml", "csv"])
    p.add_argument("--out", help="output path (csv pair requires it)")
    p.set_defaults(handler=_cmd_export)

    p = sub.add_parser("index-docs", help="chunk and embed documents into a store")
    p.add_argument("--input", required=True, help="directory of .txt/.md files")
    p.add_argument("--out", required=True)
    p.add_argument("--chunk-size", type=int, default=512)
    p.add_argument("--overlap", type=int, default=64)
    p.set_defaults(handler=_cmd_index_docs)

    return parser


def _load_graph(path: str):
    return import_graph(Path(path).read_bytes(), ExportFormat.JSON)


def _cmd_ingest(args, stdout, stderr, stdin) -> int:
    raw = Path(args.input).read_bytes()
    records, load_quarantine = load_records(raw, InputFormat(args.format))
    asts, parse_quarantine = parse_rules(records)
    graph = build_graph(compile_rules(asts))
    Path(args.out).write_bytes(export_graph(graph, ExportFormat.JSON))
    quarantined = load_quarantine + parse_quarantine
    if args.quarantine:
        with open(args.quarantine, "w", encoding="utf-8") as fh:
            for item in quarantined:
                fh.write(json.dumps(item.to_json(), sort_keys=True) + "\n")
    stats = graph.stats()
    print(
        f"ingested {len(records)} record(s): {len(asts)} parsed, "
        f"{len(quarantined)} quarantined; graph has {stats.node_count} node(s) "
        f"and {stats.edge_count} edge(s)",
        file=stdout,
    )
    return 0


def _format_table(table: ResultTable) -> str:
    if not table.columns:
        return "(empty table)"
    widths = [
        max(len(col), *(len(row[i]) for row in table.rows)) if table.rows else len(col)
        for i, col in enumerate(table.columns)
    ]
    def fmt(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()
    lines = [fmt(table.columns), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(row) for row in table.rows)
    lines.append(f"({len(table.rows)} row(s))")
    return "\n".join(lines)


def _cmd_query(args, stdout, stderr, stdin) -> int:
    graph = _load_graph(args.graph)
    assert_readonly(args.text)
    table = execute_query(parse_query(args.text), graph)
    if args.as_json:
        print(json.dumps(table.to_json(), sort_keys=True), file=stdout)
    else:
        print(_format_table(table), file=stdout)
    return 0


def _selection(graph, select: str) -> Configuration:
    ids = [s.strip() for s in select.split(",") if s.strip()]
    if not ids:
        raise UsageError("--select needs at least one node id")
    project = graph.node(ids[0]).project_name
    return Configuration.of(project, ids)


def _cmd_recommend(args, stdout, stderr, stdin) -> int:
    graph = _load_graph(args.graph)
    config = _selection(graph, args.select)
    recs = recommend_for(graph, config, args.category)
    print(
        json.dumps([r.to_json() for r in recs], sort_keys=True, indent=2), file=stdout
    )
    return 0


def _cmd_validate(args, stdout, stderr, stdin) -> int:
    graph = _load_graph(args.graph)
    config = _selection(graph, args.select)
    violations = validate_config(graph, None, config)
    print(
        json.dumps(
            {"valid": not violations, "violations": [v.to_json() for v in violations]},
            sort_keys=True,
            indent=2,
        ),
        file=stdout,
    )
    return 0


def _cmd_chat(args, stdout, stderr, stdin) -> int:
    graph = _load_graph(args.graph)
    if args.llm == "mock":
        client = MockLlmClient.from_script(args.script) if args.script else MockLlmClient([])
    else:
        client = HttpLlmClient.from_env()
    mode = AgentMode.GRAPH
    print(
        'chat REPL: type a question, "/mode GraphAgent|DocAgent" to switch, '
        '"/quit" to exit',
        file=stdout,
    )
    for line in stdin:
        question = line.strip()
        if not question:
            continue
        if question == "/quit":
            break
        if question.startswith("/mode"):
            try:
                mode = AgentMode(question.split(None, 1)[1].strip())
                print(f"mode set to {mode.value}", file=stdout)
            except (IndexError, ValueError):
                print("usage: /mode GraphAgent|DocAgent", file=stdout)
            continue
        turn = chat_turn(question, mode, graph, client)
        print(turn.answer, file=stdout)
        if turn.table is not None:
            print(_format_table(turn.table), file=stdout)
    return 0


def _cmd_serve(args, stdout, stderr, stdin) -> int:
    import os

    import uvicorn

    graph = _load_graph(args.graph)
    doc_store = VectorStore.load(args.docs) if args.docs else None
    # with LLM_ENDPOINT configured the server talks to a real model;
    # otherwise the deterministic keyword fallback answers graph questions
    llm_client = HttpLlmClient.from_env() if os.environ.get("LLM_ENDPOINT") else None
    state = ServiceState(graph=graph, doc_store=doc_store, llm_client=llm_client)
    port = args.port if args.port is not None else int(os.environ.get("PORT", "8077"))
    app = create_app(state)
    print(f"serving on port {port}", file=stdout)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")
    return 0


def _cmd_export(args, stdout, stderr, stdin) -> int:
    graph = _load_graph(args.graph)
    if args.format == "graphml":
        data = export_graph(graph, ExportFormat.GRAPHML)
        if args.out:
            Path(args.out).write_bytes(data)
        else:
            stdout.write(data.decode("utf-8"))
        return 0
    if not args.out:
        raise UsageError("csv export needs --out (writes <out>.nodes.csv and <out>.edges.csv)")
    import io
    import zipfile

    pair = export_graph(graph, ExportFormat.CSV_PAIR)
    with zipfile.ZipFile(io.BytesIO(pair)) as zf:
        Path(f"{args.out}.nodes.csv").write_bytes(zf.read("nodes.csv"))
        Path(f"{args.out}.edges.csv").write_bytes(zf.read("edges.csv"))
    print(f"wrote {args.out}.nodes.csv and {args.out}.edges.csv", file=stdout)
    return 0


def _cmd_index_docs(args, stdout, stderr, stdin) -> int:
    root = Path(args.input)
    if not root.is_dir():
        raise UsageError(f"{args.input} is not a directory")
    documents = {
        path.name: path.read_text(encoding="utf-8")
        for pattern in ("*.txt", "*.md")
        for path in sorted(root.glob(pattern))
    }
    if not documents:
        raise UsageError(f"no .txt or .md files under {args.input}")
    store = build_store(
        documents, LocalEmbedder(), size=args.chunk_size, overlap=args.overlap
    )
    store.save(args.out)
    print(f"indexed {len(documents)} document(s) into {len(store)} chunk(s)", file=stdout)
    return 0


if __name__ == "__main__":
    main()
