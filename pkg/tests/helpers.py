"""Shared builders for corpora and embedding stores used across tests."""

from __future__ import annotations

import numpy as np

from jointprop import Corpus, Entity, Relation, Sentence, build_catalog
from jointprop.embed import TokenEmbeddingStore


def sentence(
    sid: str,
    n_tokens: int,
    entities=(),
    relations=(),
    labeled: bool = True,
) -> Sentence:
    """Sentence with synthetic token strings t0..t{n-1}."""
    return Sentence(
        sid,
        tuple(f"t{i}" for i in range(n_tokens)),
        tuple(Entity(*e) if isinstance(e, tuple) else e for e in entities),
        tuple(Relation(*r) if isinstance(r, tuple) else r for r in relations),
        labeled=labeled,
    )


def corpus(sentences) -> Corpus:
    sentences = tuple(sentences)
    return Corpus(sentences, build_catalog(sentences))


def random_store(corp: Corpus, dim: int, seed: int = 0) -> TokenEmbeddingStore:
    rng = np.random.default_rng(seed)
    matrices = {
        s.id: rng.standard_normal((len(s.tokens), dim)).astype(np.float32)
        for s in corp.sentences
    }
    return TokenEmbeddingStore(dim, matrices)


def store_from_rows(rows: dict[str, list[list[float]]]) -> TokenEmbeddingStore:
    """Store from explicit per-sentence row lists; dim inferred."""
    matrices = {sid: np.asarray(mat, dtype=np.float32) for sid, mat in rows.items()}
    dim = next(iter(matrices.values())).shape[1]
    return TokenEmbeddingStore(dim, matrices)


def graph_from_dense(dense, stage: str):
    """CSR graph over the nonzero entries of a dense matrix."""
    from jointprop.graph import AffinityGraph

    dense = np.asarray(dense, dtype=np.float64)
    t = dense.shape[0]
    indptr = [0]
    indices = []
    weights = []
    for a in range(t):
        cols = np.flatnonzero(dense[a])
        indices.extend(cols)
        weights.extend(dense[a, cols])
        indptr.append(len(indices))
    return AffinityGraph(
        t,
        np.array(indptr, dtype=np.int64),
        np.array(indices, dtype=np.int64),
        np.array(weights, dtype=np.float64),
        stage,
    )
