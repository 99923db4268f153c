"""Document retrieval: chunking, embedding, vector store and top-k search.

The default embedder is a deterministic hashed bag-of-words (signed feature
hashing over lowercase word tokens, L2-normalized), so the retrieval
machinery is fully testable offline; an HTTP embedder speaking the
OpenAI-compatible /embeddings contract can be swapped in. Search is exact
cosine over the whole store.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import TransportError, UsageError

DEFAULT_DIMENSION = 256
DEFAULT_CHUNK_SIZE = 512
DEFAULT_CHUNK_OVERLAP = 64
_WHITESPACE_LOOKBACK = 16

_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    seq: int
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    is_guard: bool = False

    @property
    def dimension(self) -> int:
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def chunk_text(
    doc_id: str,
    text: str,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """Split a document into overlapping character windows.

    Windows prefer to end at whitespace within a 16-character lookback when
    that still makes progress past the overlap. Each chunk's text equals
    ``text[char_start:char_end]`` and consecutive chunks overlap by exactly
    ``overlap`` characters, so offset-based reassembly is exact.
    """
    if overlap < 0 or size <= 0 or overlap >= size:
        raise UsageError(f"need 0 <= overlap < size, got size={size} overlap={overlap}")
    chunks: list[Chunk] = []
    start = 0
    seq = 0
    while start < len(text):
        end = min(start + size, len(text))
        if end < len(text):
            window = text[max(end - _WHITESPACE_LOOKBACK, start + overlap + 1) : end]
            cut = max(
                (i for i, ch in enumerate(window) if ch.isspace()), default=None
            )
            if cut is not None:
                end = end - (len(window) - cut) + 1
        chunks.append(
            Chunk(doc_id=doc_id, seq=seq, text=text[start:end], char_start=start, char_end=end)
        )
        if end == len(text):
            break
        start = end - overlap
        seq += 1
    return chunks


class Embedder(Protocol):
    dimension: int

    def embed(self, text: str) -> EmbeddingVector: ...


class LocalEmbedder:
    """Hashed bag-of-words embedder: pure function of the text.

    Lowercase word tokens are hashed (blake2b, so stable across processes) to
    one of ``dimension`` buckets with a +/-1 sign bit, counted, and the
    resulting vector is L2-normalized. Texts with no tokens (or a fully
    cancelled vector) get the flagged first-basis-vector guard.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 2:
            raise UsageError("dimension must be at least 2")
        self.dimension = dimension

    def embed(self, text: str) -> EmbeddingVector:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in _WORD_RE.findall(text.lower()):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            bucket = value % self.dimension
            sign = 1.0 if (value >> 63) & 1 == 0 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm < 1e-12:
            guard = np.zeros(self.dimension, dtype=np.float64)
            guard[0] = 1.0
            return EmbeddingVector(values=tuple(guard.tolist()), is_guard=True)
        return EmbeddingVector(values=tuple((vec / norm).tolist()))


class HttpEmbedder:
    """POST {endpoint}/embeddings with the OpenAI-compatible body shape."""

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        api_key: str = "",
        dimension: int = DEFAULT_DIMENSION,
        timeout_secs: float = 30.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dimension = dimension
        self.timeout_secs = timeout_secs

    def embed(self, text: str) -> EmbeddingVector:
        if not text.strip():
            guard = [0.0] * self.dimension
            guard[0] = 1.0
            return EmbeddingVector(values=tuple(guard), is_guard=True)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                f"{self.endpoint}/embeddings",
                json={"model": self.model, "input": text},
                headers=headers,
                timeout=self.timeout_secs,
            )
            response.raise_for_status()
            payload = response.json()
            raw = payload["data"][0]["embedding"]
        except requests.RequestException as exc:
            raise TransportError(f"embedding request failed: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"unexpected embedding payload: {exc}") from exc
        vec = np.asarray([float(x) for x in raw], dtype=np.float64)
        if vec.shape[0] != self.dimension:
            raise TransportError(
                f"embedding dimension {vec.shape[0]} != configured {self.dimension}"
            )
        norm = float(np.linalg.norm(vec))
        if norm < 1e-12:
            guard = np.zeros(self.dimension)
            guard[0] = 1.0
            return EmbeddingVector(values=tuple(guard.tolist()), is_guard=True)
        return EmbeddingVector(values=tuple((vec / norm).tolist()))


def embed_text(text: str, embedder: Embedder) -> EmbeddingVector:
    return embedder.embed(text)


class VectorStore:
    """Immutable collection of (chunk, unit-norm vector) pairs."""

    def __init__(self, entries: Sequence[tuple[Chunk, EmbeddingVector]], dimension: int):
        for _, vector in entries:
            if vector.dimension != dimension:
                raise UsageError(
                    f"vector dimension {vector.dimension} != store dimension {dimension}"
                )
        self.dimension = dimension
        self.entries: tuple[tuple[Chunk, EmbeddingVector], ...] = tuple(entries)
        if entries:
            self._matrix = np.stack([v.array() for _, v in entries])
        else:
            self._matrix = np.zeros((0, dimension), dtype=np.float64)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json_bytes(self) -> bytes:
        doc = {
            "dimension": self.dimension,
            "entries": [
                {
                    "doc_id": chunk.doc_id,
                    "seq": chunk.seq,
                    "char_start": chunk.char_start,
                    "char_end": chunk.char_end,
                    "text": chunk.text,
                    "vector": list(vector.values),
                }
                for chunk, vector in self.entries
            ],
        }
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")

    @classmethod
    def from_json_bytes(cls, data: bytes) -> "VectorStore":
        doc = json.loads(data.decode("utf-8"))
        entries = [
            (
                Chunk(
                    doc_id=str(e["doc_id"]),
                    seq=int(e["seq"]),
                    text=str(e["text"]),
                    char_start=int(e["char_start"]),
                    char_end=int(e["char_end"]),
                ),
                EmbeddingVector(values=tuple(float(x) for x in e["vector"])),
            )
            for e in doc["entries"]
        ]
        return cls(entries, dimension=int(doc["dimension"]))

    @classmethod
    def load(cls, path: str | Path) -> "VectorStore":
        return cls.from_json_bytes(Path(path).read_bytes())

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_json_bytes())


def build_store(
    documents: dict[str, str],
    embedder: Embedder,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> VectorStore:
    """Chunk and embed a {doc_id: text} mapping in sorted doc order."""
    entries: list[tuple[Chunk, EmbeddingVector]] = []
    for doc_id in sorted(documents):
        for chunk in chunk_text(doc_id, documents[doc_id], size=size, overlap=overlap):
            entries.append((chunk, embedder.embed(chunk.text)))
    return VectorStore(entries, dimension=embedder.dimension)


def search_topk(
    store: VectorStore, query_vector: EmbeddingVector, k: int
) -> list[tuple[Chunk, float]]:
    """The k store entries most cosine-similar to the query.

    Descending score, ties broken by (doc_id, seq); returns min(k, |store|)
    entries. Vectors are unit-norm, so cosine reduces to a dot product.
    Ordering quantizes scores to 1e-9 so that ranking does not depend on
    summation order in the numeric backend.
    """
    if k < 1:
        raise UsageError("k must be at least 1")
    if query_vector.dimension != store.dimension:
        raise UsageError(
            f"query dimension {query_vector.dimension} != store dimension {store.dimension}"
        )
    if not store.entries:
        return []
    scores = store._matrix @ query_vector.array()
    ranked = sorted(
        range(len(store.entries)),
        key=lambda i: (
            -round(float(scores[i]), 9),
            store.entries[i][0].doc_id,
            store.entries[i][0].seq,
        ),
    )
    return [(store.entries[i][0], float(scores[i])) for i in ranked[:k]]


@dataclass(frozen=True)
class DocAnswer:
    answer: str
    citations: tuple[dict, ...]

    def to_json(self) -> dict:
        return {"answer": self.answer, "citations": list(self.citations)}


def answer_from_docs(
    question: str,
    store: VectorStore,
    embedder: Embedder,
    llm_client=None,
    k: int = 4,
) -> DocAnswer:
    """Retrieve top-k chunks for a question and compose an answer.

    Template mode (no llm_client) concatenates the retrieved snippets with
    doc-id and offset citations deterministically; LLM mode sends them as
    context for a free-form answer. An empty store yields a notice.
    """
    if len(store) == 0:
        return DocAnswer(answer="no documents indexed", citations=())
    hits = search_topk(store, embedder.embed(question), k)
    citations = tuple(
        {
            "doc_id": chunk.doc_id,
            "seq": chunk.seq,
            "char_start": chunk.char_start,
            "char_end": chunk.char_end,
            "score": round(score, 6),
        }
        for chunk, score in hits
    )
    snippets = [
        f"[{chunk.doc_id}#{chunk.seq} chars {chunk.char_start}-{chunk.char_end}] "
        + " ".join(chunk.text.split())
        for chunk, _ in hits
    ]
    if llm_client is None:
        body = "\n".join(snippets)
        return DocAnswer(
            answer=f"Top {len(hits)} passage(s) for: {question}\n{body}",
            citations=citations,
        )
    from .llm import LlmMessage, LlmRequest  # local import to avoid a cycle

    prompt = (
        "Answer the question using only these passages; cite the bracketed ids.\n\n"
        + "\n".join(snippets)
        + f"\n\nQuestion: {question}"
    )
    response = llm_client.complete(
        LlmRequest(
            messages=(
                LlmMessage("system", "You answer hardware compatibility questions."),
                LlmMessage("user", prompt),
            ),
            temperature=0.0,
        )
    )
    return DocAnswer(answer=response.content, citations=citations)
