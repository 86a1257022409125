#!/usr/bin/env python3
"""Regenerate fixtures/embeddings.json from the fixture datasets.

Vectors are deterministic hash-derived 8-dim pseudo-embeddings; they carry no
semantics but give the retriever stable, nonzero vectors for offline runs.
Run after editing any fixture question: python scripts/gen_embeddings.py
"""

import hashlib
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
DIM = 8


def pseudo_vector(text: str) -> list[float]:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    vec = []
    for i in range(DIM):
        word = int.from_bytes(digest[4 * i : 4 * i + 4], "big")
        vec.append(round(word / 2**31 - 1.0, 6))
    if all(v == 0.0 for v in vec):  # vanishingly unlikely; keep norms positive
        vec[0] = 1.0
    return vec


def main() -> None:
    questions: list[str] = []
    for name in ("dev.json", "seed.json", "naq.json"):
        for item in json.loads((FIXTURES / name).read_text(encoding="utf-8")):
            questions.append(item["question"])
    vectors = {q: pseudo_vector(q) for q in questions}
    out = FIXTURES / "embeddings.json"
    out.write_text(json.dumps(vectors, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {len(vectors)} vectors to {out}")


if __name__ == "__main__":
    main()
