"""Pretrained word-vector loading (GloVe-style text files)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError
from .vocab import Vocabulary


@dataclass
class EmbeddingTable:
    """Per-token vectors restricted to one vocabulary.

    ``coverage`` is the fraction of non-reserved vocabulary tokens that had a
    pretrained vector; the rest were drawn from the seeded fallback.
    """

    dim: int
    vectors: dict[str, np.ndarray]
    coverage: float

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)


def load_embeddings(
    path: str | Path,
    vocab: Vocabulary,
    dim: int = 50,
    seed: int = 0,
    scale: float = 0.08,
) -> EmbeddingTable:
    """Read `token v1 ... v{dim}` lines, keeping only vocabulary tokens.

    Tokens without a pretrained vector get a uniform(-scale, scale) vector
    from the seeded generator, so the result is deterministic.
    """
    path = Path(path)
    found: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            parts = raw.split()
            if len(parts) != dim + 1:
                raise ParseError(
                    f"expected a token and {dim} values, got {len(parts)} fields",
                    str(path),
                    i,
                )
            token = parts[0]
            if token not in vocab:
                continue
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as e:
                raise ParseError(f"non-numeric embedding value: {e}", str(path), i) from None
            found[token] = vec

    rng = np.random.default_rng(seed)
    vectors: dict[str, np.ndarray] = {}
    content = [t for t in vocab.tokens()]
    hits = 0
    n_content = 0
    from .vocab import RESERVED

    for token in content:
        if token in found:
            vectors[token] = found[token]
        else:
            vectors[token] = rng.uniform(-scale, scale, size=dim)
        if token not in RESERVED:
            n_content += 1
            if token in found:
                hits += 1
    coverage = hits / n_content if n_content else 0.0
    return EmbeddingTable(dim=dim, vectors=vectors, coverage=coverage)
