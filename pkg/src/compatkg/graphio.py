"""Graph import/export: JSON (lossless), GraphML, and a nodes+edges CSV pair.

Exports are byte-deterministic for identical graphs. The CSV pair is packed
into a zip archive with a fixed timestamp so the single-stream contract
holds; the CLI unpacks it into nodes.csv / edges.csv files.
"""

from __future__ import annotations

import csv
import io
import json
import zipfile
from enum import Enum
from xml.etree import ElementTree as ET

from .errors import DocumentParseError
from .graph import (
    CompatEdge,
    ComponentNode,
    Graph,
    GraphBatch,
    SelectGroup,
    build_graph,
)

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

_NODE_KEYS = (
    "name",
    "original_rule",
    "rule_index",
    "rule_type",
    "project_name",
    "date",
    "owner",
    "category",
)
_EDGE_KEYS = ("polarity", "provenance_rule_index")


class ExportFormat(Enum):
    JSON = "json"
    GRAPHML = "graphml"
    CSV_PAIR = "csv"


def export_graph(graph: Graph, fmt: ExportFormat) -> bytes:
    if fmt is ExportFormat.JSON:
        return _to_json(graph)
    if fmt is ExportFormat.GRAPHML:
        return _to_graphml(graph)
    if fmt is ExportFormat.CSV_PAIR:
        return _to_csv_pair(graph)
    raise ValueError(f"unknown export format: {fmt!r}")


def import_graph(data: bytes, fmt: ExportFormat) -> Graph:
    if fmt is ExportFormat.JSON:
        return _from_json(data)
    if fmt is ExportFormat.GRAPHML:
        return _from_graphml(data)
    if fmt is ExportFormat.CSV_PAIR:
        return _from_csv_pair(data)
    raise ValueError(f"unknown import format: {fmt!r}")


def graphs_equal(a: Graph, b: Graph) -> bool:
    return (
        a.nodes == b.nodes and a.edges == b.edges and a.groups == b.groups
    )


# -- JSON -------------------------------------------------------------------


def _to_json(graph: Graph) -> bytes:
    doc = {
        "nodes": [n.to_json() for n in graph.nodes],
        "edges": [e.to_json() for e in graph.edges],
        "groups": [g.to_json() for g in graph.groups],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _from_json(data: bytes) -> Graph:
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise DocumentParseError(f"not UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentParseError(
            exc.msg, location=f"line {exc.lineno}, column {exc.colno}"
        ) from exc
    if not isinstance(doc, dict):
        raise DocumentParseError("graph document must be a JSON object")
    for key in ("nodes", "edges", "groups"):
        if key not in doc or not isinstance(doc[key], list):
            raise DocumentParseError(f"graph document is missing the {key!r} list")
    try:
        batch = GraphBatch(
            nodes=tuple(ComponentNode.from_json(n) for n in doc["nodes"]),
            edges=tuple(CompatEdge.from_json(e) for e in doc["edges"]),
            groups=tuple(SelectGroup.from_json(g) for g in doc["groups"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise DocumentParseError(f"bad graph document field: {exc}") from exc
    return build_graph(batch)


# -- GraphML ----------------------------------------------------------------


def _to_graphml(graph: Graph) -> bytes:
    root = ET.Element("graphml", xmlns=GRAPHML_NS)
    for key in _NODE_KEYS:
        attr_type = "int" if key in ("rule_index",) else "string"
        ET.SubElement(
            root,
            "key",
            id=f"n_{key}",
            attrib={"for": "node", "attr.name": key, "attr.type": attr_type},
        )
    for key in _EDGE_KEYS:
        attr_type = "int" if key == "provenance_rule_index" else "string"
        ET.SubElement(
            root,
            "key",
            id=f"e_{key}",
            attrib={"for": "edge", "attr.name": key, "attr.type": attr_type},
        )
    gel = ET.SubElement(root, "graph", id="G", edgedefault="directed")
    for node in graph.nodes:
        nel = ET.SubElement(gel, "node", id=node.id)
        payload = node.to_json()
        for key in _NODE_KEYS:
            del_ = ET.SubElement(nel, "data", key=f"n_{key}")
            del_.text = str(payload[key])
    for i, edge in enumerate(graph.edges):
        eel = ET.SubElement(gel, "edge", id=f"e{i}", source=edge.src, target=edge.dst)
        pol = ET.SubElement(eel, "data", key="e_polarity")
        pol.text = edge.polarity.value
        prov = ET.SubElement(eel, "data", key="e_provenance_rule_index")
        prov.text = str(edge.provenance_rule_index)
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _from_graphml(data: bytes) -> Graph:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise DocumentParseError(f"bad GraphML: {exc}", location=str(exc.position)) from exc
    ns = {"g": GRAPHML_NS}
    gel = root.find("g:graph", ns)
    if gel is None:
        raise DocumentParseError("GraphML document has no <graph> element")
    key_names = {
        el.get("id"): el.get("attr.name") for el in root.findall("g:key", ns)
    }
    nodes = []
    for nel in gel.findall("g:node", ns):
        values = {
            key_names.get(d.get("key"), d.get("key")): d.text or ""
            for d in nel.findall("g:data", ns)
        }
        values["id"] = nel.get("id")
        try:
            nodes.append(ComponentNode.from_json(values))
        except (KeyError, ValueError) as exc:
            raise DocumentParseError(
                f"bad GraphML node {nel.get('id')!r}: {exc}"
            ) from exc
    edges = []
    for eel in gel.findall("g:edge", ns):
        values = {
            key_names.get(d.get("key"), d.get("key")): d.text or ""
            for d in eel.findall("g:data", ns)
        }
        values["src"] = eel.get("source")
        values["dst"] = eel.get("target")
        try:
            edges.append(CompatEdge.from_json(values))
        except (KeyError, ValueError) as exc:
            raise DocumentParseError(f"bad GraphML edge: {exc}") from exc
    return build_graph(GraphBatch(nodes=tuple(nodes), edges=tuple(edges)))


# -- CSV pair ---------------------------------------------------------------


def _nodes_csv(graph: Graph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("id",) + _NODE_KEYS)
    for node in graph.nodes:
        payload = node.to_json()
        writer.writerow([payload["id"]] + [payload[k] for k in _NODE_KEYS])
    return buf.getvalue()


def _edges_csv(graph: Graph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("src", "dst") + _EDGE_KEYS)
    for edge in graph.edges:
        writer.writerow(
            [edge.src, edge.dst, edge.polarity.value, edge.provenance_rule_index]
        )
    return buf.getvalue()


def _to_csv_pair(graph: Graph) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, text in (("nodes.csv", _nodes_csv(graph)), ("edges.csv", _edges_csv(graph))):
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, text)
    return buf.getvalue()


def _from_csv_pair(data: bytes) -> Graph:
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
        nodes_text = zf.read("nodes.csv").decode("utf-8")
        edges_text = zf.read("edges.csv").decode("utf-8")
    except (zipfile.BadZipFile, KeyError, UnicodeDecodeError) as exc:
        raise DocumentParseError(f"bad CSV pair archive: {exc}") from exc
    try:
        nodes = [
            ComponentNode.from_json(row) for row in csv.DictReader(io.StringIO(nodes_text))
        ]
        edges = [
            CompatEdge.from_json(
                {
                    "src": row["src"],
                    "dst": row["dst"],
                    "polarity": row["polarity"],
                    "provenance_rule_index": row["provenance_rule_index"],
                }
            )
            for row in csv.DictReader(io.StringIO(edges_text))
        ]
    except (KeyError, ValueError) as exc:
        raise DocumentParseError(f"bad CSV pair row: {exc}") from exc
    return build_graph(GraphBatch(nodes=tuple(nodes), edges=tuple(edges)))
