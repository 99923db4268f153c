from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from compatkg.graph import build_graph
from compatkg.ingest import InputFormat, compile_rules, load_records, parse_rules

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_bytes() -> bytes:
    return (FIXTURES / "rules_fixture.tsv").read_bytes()


@pytest.fixture(scope="session")
def corpus(corpus_bytes):
    """(records, load_quarantine, asts, parse_quarantine) for the fixture file."""
    records, load_q = load_records(corpus_bytes, InputFormat.TSV)
    asts, parse_q = parse_rules(records)
    return records, load_q, asts, parse_q


@pytest.fixture(scope="session")
def corpus_graph(corpus):
    _, _, asts, _ = corpus
    return build_graph(compile_rules(asts))


@pytest.fixture(scope="session")
def table1_graph(corpus):
    """Graph compiled from just the two sample parent/child rows."""
    records, _, _, _ = corpus
    subset = [r for r in records if r.project_name == "M90a Pro"]
    asts, quarantined = parse_rules(subset)
    assert len(asts) == 2 and not quarantined
    return build_graph(compile_rules(asts))


@pytest.fixture(scope="session")
def m70t_graph(corpus):
    """Graph for the ThinkCentre M70T Gen5 rows only."""
    records, _, _, _ = corpus
    subset = [r for r in records if r.project_name == "ThinkCentre M70T Gen5"]
    asts, _ = parse_rules(subset)
    return build_graph(compile_rules(asts))
