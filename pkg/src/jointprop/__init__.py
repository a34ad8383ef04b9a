"""Transductive pseudo-labeling for joint entity and relation extraction.

Labels propagate from a small annotated corpus to span and span-pair
candidates in unlabeled sentences over kNN affinity graphs; confident
predictions come back as an augmented training corpus.
"""

from .corpus import (
    ClassCatalog,
    Corpus,
    Entity,
    Relation,
    Sentence,
    build_catalog,
    load_corpus,
    save_corpus,
    split_corpus,
    validate_corpus,
)
from .embed import TokenEmbeddingStore, read_embeddings, write_embeddings
from .errors import JointpropError, ValidationError
from .graph import AffinityGraph, build_normalized_graph, knn_affinity, normalize, symmetrize
from .pipeline import RunConfig, emit_augmented, evaluate_against_gold, run_joint
from .propagate import (
    PropagationResult,
    PseudoLabel,
    decode,
    propagate_closed_form,
    propagate_iterative,
)
from .report import estimate_rate, render_report
from .spans import PairCandidate, SpanCandidate, enumerate_pairs, enumerate_spans

__version__ = "0.1.0"

__all__ = [
    "AffinityGraph",
    "ClassCatalog",
    "Corpus",
    "Entity",
    "JointpropError",
    "PairCandidate",
    "PropagationResult",
    "PseudoLabel",
    "Relation",
    "RunConfig",
    "Sentence",
    "SpanCandidate",
    "TokenEmbeddingStore",
    "ValidationError",
    "build_catalog",
    "build_normalized_graph",
    "decode",
    "emit_augmented",
    "enumerate_pairs",
    "enumerate_spans",
    "estimate_rate",
    "evaluate_against_gold",
    "knn_affinity",
    "load_corpus",
    "normalize",
    "propagate_closed_form",
    "propagate_iterative",
    "read_embeddings",
    "render_report",
    "run_joint",
    "save_corpus",
    "split_corpus",
    "symmetrize",
    "validate_corpus",
    "write_embeddings",
]
