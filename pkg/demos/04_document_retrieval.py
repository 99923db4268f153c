"""The document path: chunk, embed, store, search.

Indexes the bundled engineering notes with the deterministic local
embedder and answers a question by cosine top-k retrieval.
"""

from pathlib import Path

from compatkg import LocalEmbedder, answer_from_docs, build_store, chunk_text, search_topk

ROOT = Path(__file__).resolve().parents[1]
DOCS = ROOT / "fixtures" / "docs"

sample = (DOCS / "psu_sizing.txt").read_text()
chunks = chunk_text("psu_sizing.txt", sample, size=300, overlap=48)
print(f"psu_sizing.txt -> {len(chunks)} chunks; window offsets:")
for chunk in chunks:
    print(f"  #{chunk.seq}: chars {chunk.char_start}..{chunk.char_end}")

embedder = LocalEmbedder()
documents = {p.name: p.read_text() for p in sorted(DOCS.glob("*.txt"))}
store = build_store(documents, embedder, size=300, overlap=48)
print(f"\nstore: {len(store)} chunks at dimension {store.dimension}")

question = "which power supply does a discrete GPU need in the ES chassis?"
print(f"\nquestion: {question}")
for chunk, score in search_topk(store, embedder.embed(question), k=3):
    preview = " ".join(chunk.text.split())[:70]
    print(f"  {score:+.4f}  {chunk.doc_id}#{chunk.seq}  {preview}...")

answer = answer_from_docs(question, store, embedder)
print("\ntemplate-mode answer:")
print(answer.answer)
