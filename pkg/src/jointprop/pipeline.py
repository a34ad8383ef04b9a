"""Joint entity-then-relation propagation over a partially labeled corpus.

Each round runs the entity task first: enumerate spans on unlabeled
sentences, seed the graph with gold entities from labeled sentences,
propagate, decode.  The relation task then pairs spans within unlabeled
sentences (optionally restricted to gold-plus-pseudo-labeled spans),
seeds with gold relations, and repeats the procedure on pair features.
Pseudo-labels accumulate across rounds: later rounds may add emissions
but never overwrite earlier ones, and gold seeds are never replaced.

Gold annotations carried by unlabeled sentences are a held-out secret:
nothing here reads them except the evaluation helpers, and the augmented
output replaces them with the propagated annotations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from . import kernels, report
from .corpus import Corpus, Entity, Relation, Sentence, save_corpus
from .embed import TokenEmbeddingStore, pair_feature_matrix, span_feature_matrix
from .errors import ValidationError
from .graph import build_normalized_graph, write_graph_dump
from .propagate import (
    DEFAULT_MAX_ITERS,
    DEFAULT_MIXING,
    DEFAULT_THRESHOLD,
    DEFAULT_TOL,
    PseudoLabel,
    decode,
    propagate_iterative,
    seed_matrix,
)
from .spans import (
    PairCandidate,
    SpanCandidate,
    enumerate_pairs,
    enumerate_spans,
    partition_entity_nodes,
    partition_relation_nodes,
)

PROPAGATED_SOURCE = "propagated"
DEFAULT_PAIR_CAP = 5000


@dataclass(frozen=True)
class RunConfig:
    """Numeric knobs and flags for one joint run; paths live with the CLI."""

    k: int = 50
    sigma: float = 2.0
    c: float = DEFAULT_MIXING
    threshold: float = DEFAULT_THRESHOLD
    threshold_quantile: float | None = None
    max_width: int = 8
    width_buckets: int = 6
    rounds: int = 1
    restrict_pairs: bool = False
    pair_cap: int | None = DEFAULT_PAIR_CAP
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = 0
    backend: str | None = None


def _validate_config(config: RunConfig) -> None:
    if config.k < 1:
        raise ValidationError("k must be >= 1")
    if config.sigma <= 0:
        raise ValidationError("sigma must be positive")
    if not 0 < config.c < 1:
        raise ValidationError("c must be in (0, 1)")
    if config.threshold_quantile is not None and not 0 <= config.threshold_quantile <= 1:
        raise ValidationError("threshold quantile must be in [0, 1]")
    if config.max_width < 1:
        raise ValidationError("max span width must be >= 1")
    if config.width_buckets < 1:
        raise ValidationError("width bucket count must be >= 1")
    if config.rounds < 1:
        raise ValidationError("rounds must be >= 1")
    if config.pair_cap is not None and config.pair_cap < 1:
        raise ValidationError("pair cap must be >= 1")
    if config.tol <= 0:
        raise ValidationError("tol must be positive")
    if config.max_iters < 1:
        raise ValidationError("max_iters must be >= 1")


def _config_block(config: RunConfig) -> dict:
    return {
        "k": config.k,
        "sigma": config.sigma,
        "c": config.c,
        "threshold": config.threshold,
        "threshold_quantile": config.threshold_quantile,
        "max_width": config.max_width,
        "width_buckets": config.width_buckets,
        "rounds": config.rounds,
        "restrict_pairs": config.restrict_pairs,
        "pair_cap": config.pair_cap,
        "tol": config.tol,
        "max_iters": config.max_iters,
        "seed": config.seed,
        "backend": config.backend or kernels.active_backend(),
    }


def _skip_reason(partition) -> str | None:
    if partition.num_labeled == 0:
        return "no seeds"
    if partition.num_unlabeled == 0:
        return "no unlabeled candidates"
    return None


def _run_stage(
    task: str,
    rnd: int,
    partition,
    classes: tuple[str, ...],
    features,
    config: RunConfig,
    emissions: dict,
    graph_sink,
    trace: list | None,
) -> dict:
    """One propagate-and-decode pass; accumulates first-wins emissions."""
    graph = build_normalized_graph(features, config.k, config.sigma, backend=config.backend)
    if graph_sink is not None:
        write_graph_dump(graph, graph_sink, extra={"task": task, "round": rnd})

    labels_z = seed_matrix(partition, len(classes))
    stage_trace: list | None = [] if trace is not None else None
    result = propagate_iterative(
        graph, labels_z, config.c, config.max_iters, config.tol,
        trace=stage_trace, backend=config.backend,
    )
    if trace is not None:
        trace.extend((task, rnd, t, r) for t, r in stage_trace)

    labels = decode(
        result.scores, partition, classes, config.threshold, config.threshold_quantile
    )
    new = 0
    for label in labels:
        if label.candidate not in emissions:
            emissions[label.candidate] = label
            new += 1
    return {
        "round": rnd,
        "nodes": partition.num_nodes,
        "seeds": partition.num_labeled,
        "unlabeled": partition.num_unlabeled,
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": result.converged,
        "emitted": len(labels),
        "newly_emitted": new,
    }


def run_joint(
    config: RunConfig,
    corpus: Corpus,
    store: TokenEmbeddingStore,
    graph_sink=None,
    trace: list | None = None,
) -> tuple[Corpus, dict]:
    """Propagate entity and relation labels and build the augmented corpus.

    Returns (augmented corpus, run report).  A task with no seeds or no
    unlabeled candidates is skipped and flagged in the report rather than
    failing the run.  ``graph_sink`` (file-like) receives a JSONL dump of
    every normalized graph; ``trace`` (list) collects per-iteration
    residuals as (task, round, iteration, residual) rows.
    """
    _validate_config(config)
    started = time.perf_counter()

    labeled_view = Corpus(corpus.labeled_sentences, corpus.catalog)
    unlabeled = corpus.unlabeled_sentences

    rep = report.empty_report()
    rep["config"] = _config_block(config)
    rep["corpus"] = {
        "sentences": len(corpus.sentences),
        "labeled_sentences": len(labeled_view.sentences),
        "unlabeled_sentences": len(unlabeled),
        "entity_types": list(corpus.catalog.entity_types),
        "relation_types": list(corpus.catalog.relation_types),
    }
    timings = rep["timings"]

    entity_emissions: dict[SpanCandidate, PseudoLabel] = {}
    relation_emissions: dict[PairCandidate, PseudoLabel] = {}

    # The span candidate set is static across rounds; only the relation
    # pool changes (it may grow as entity pseudo-labels accumulate).
    span_candidates = [
        span for sent in unlabeled for span in enumerate_spans(sent, config.max_width)
    ]
    entity_partition = partition_entity_nodes(
        span_candidates, labeled_view, corpus.catalog.entity_types, config.max_width
    )

    entity_block = rep["tasks"]["entity"]
    relation_block = rep["tasks"]["relation"]
    entity_block["dropped_gold"] = list(entity_partition.dropped_gold)

    for rnd in range(1, config.rounds + 1):
        stage_start = time.perf_counter()
        reason = _skip_reason(entity_partition)
        if reason is None:
            features = span_feature_matrix(
                store, entity_partition.candidates(), config.width_buckets
            )
            round_stats = _run_stage(
                "entity",
                rnd,
                entity_partition,
                corpus.catalog.entity_types,
                features,
                config,
                entity_emissions,
                graph_sink,
                trace,
            )
            entity_block["rounds"].append(round_stats)
            entity_block["skipped"] = False
            entity_block["skip_reason"] = None
        else:
            entity_block["skipped"] = True
            entity_block["skip_reason"] = reason
        _fill_task_counts(entity_block, entity_partition, len(entity_emissions))
        timings[f"entity_round_{rnd}_s"] = time.perf_counter() - stage_start

        stage_start = time.perf_counter()
        if config.restrict_pairs:
            pool = sorted(entity_emissions)
        else:
            pool = span_candidates
        pairs, truncated = enumerate_pairs(pool, cap=config.pair_cap)
        relation_partition = partition_relation_nodes(
            pairs, labeled_view, corpus.catalog.relation_types, config.max_width
        )
        relation_block["dropped_gold"] = list(relation_partition.dropped_gold)
        relation_block["candidates_truncated"] = bool(
            relation_block["candidates_truncated"] or truncated
        )
        reason = _skip_reason(relation_partition)
        if reason is None:
            features = pair_feature_matrix(
                store, relation_partition.candidates(), config.width_buckets
            )
            round_stats = _run_stage(
                "relation",
                rnd,
                relation_partition,
                corpus.catalog.relation_types,
                features,
                config,
                relation_emissions,
                graph_sink,
                trace,
            )
            relation_block["rounds"].append(round_stats)
            relation_block["skipped"] = False
            relation_block["skip_reason"] = None
        else:
            relation_block["skipped"] = True
            relation_block["skip_reason"] = reason
        _fill_task_counts(relation_block, relation_partition, len(relation_emissions))
        timings[f"relation_round_{rnd}_s"] = time.perf_counter() - stage_start

    augmented, dropped_endpoints = build_augmented(
        corpus, entity_emissions, relation_emissions
    )
    relation_block["dropped_endpoint_labels"] = dropped_endpoints
    relation_block["emitted"] -= dropped_endpoints
    relation_block["abstained"] += dropped_endpoints

    timings["total_s"] = time.perf_counter() - started
    return augmented, rep


def _fill_task_counts(block: dict, partition, emitted: int) -> None:
    block["nodes"] = partition.num_nodes
    block["seeds"] = partition.num_labeled
    block["unlabeled"] = partition.num_unlabeled
    block["emitted"] = emitted
    block["abstained"] = partition.num_unlabeled - emitted


def build_augmented(
    corpus: Corpus,
    entity_emissions: dict[SpanCandidate, PseudoLabel],
    relation_emissions: dict[PairCandidate, PseudoLabel],
) -> tuple[Corpus, int]:
    """Attach pseudo-annotations to unlabeled sentences.

    Labeled sentences pass through as the same objects.  Unlabeled
    sentences get their (held-out) annotations replaced by the propagated
    ones, each tagged with a source marker and its confidence.  A relation
    emission whose endpoints were never emitted as entities cannot be
    expressed in the corpus schema; those are dropped and counted.
    """
    spans_by_sid: dict[str, list[SpanCandidate]] = {}
    for span in entity_emissions:
        spans_by_sid.setdefault(span.sentence_id, []).append(span)
    pairs_by_sid: dict[str, list[PairCandidate]] = {}
    for pair in relation_emissions:
        pairs_by_sid.setdefault(pair.sentence_id, []).append(pair)

    dropped = 0
    sentences = []
    for sent in corpus.sentences:
        if sent.labeled:
            sentences.append(sent)
            continue
        entities = []
        index_of: dict[SpanCandidate, int] = {}
        for span in sorted(spans_by_sid.get(sent.id, [])):
            label = entity_emissions[span]
            index_of[span] = len(entities)
            entities.append(
                Entity(
                    span.start,
                    span.end,
                    label.class_name,
                    source=PROPAGATED_SOURCE,
                    confidence=label.confidence,
                )
            )
        relations = []
        for pair in sorted(pairs_by_sid.get(sent.id, [])):
            label = relation_emissions[pair]
            head_idx = index_of.get(pair.head)
            tail_idx = index_of.get(pair.tail)
            if head_idx is None or tail_idx is None:
                dropped += 1
                continue
            relations.append(
                Relation(
                    head_idx,
                    tail_idx,
                    label.class_name,
                    source=PROPAGATED_SOURCE,
                    confidence=label.confidence,
                )
            )
        sentences.append(
            replace(sent, entities=tuple(entities), relations=tuple(relations))
        )
    return Corpus(tuple(sentences), corpus.catalog), dropped


def emit_augmented(
    corpus: Corpus,
    entity_labels: list[PseudoLabel],
    relation_labels: list[PseudoLabel],
    path,
) -> tuple[Corpus, int]:
    """Write the augmented corpus JSONL for explicit pseudo-label lists."""
    entity_emissions: dict[SpanCandidate, PseudoLabel] = {}
    for label in entity_labels:
        entity_emissions.setdefault(label.candidate, label)
    relation_emissions: dict[PairCandidate, PseudoLabel] = {}
    for label in relation_labels:
        relation_emissions.setdefault(label.candidate, label)
    augmented, dropped = build_augmented(corpus, entity_emissions, relation_emissions)
    save_corpus(augmented, path)
    return augmented, dropped


def _relation_tuple(sent: Sentence, relation: Relation) -> tuple:
    head = sent.entities[relation.head]
    tail = sent.entities[relation.tail]
    return (
        sent.id,
        head.start,
        head.end,
        tail.start,
        tail.end,
        relation.type,
    )


def evaluate_against_gold(augmented: Corpus, gold: Corpus) -> dict:
    """Micro P/R/F1 of propagated annotations against held-out gold.

    Scoring covers the augmented corpus's unlabeled sentences.  An entity
    counts as correct iff boundaries and class match a gold entity; a
    relation iff both endpoint spans and the class match.  Gold nulls
    (unannotated candidates) earn no credit either way.
    """
    gold_by_id = {s.id: s for s in gold.sentences}
    entity_pred, entity_gold = set(), set()
    relation_pred, relation_gold = set(), set()
    for sent in augmented.sentences:
        if sent.labeled:
            continue
        gold_sent = gold_by_id.get(sent.id)
        if gold_sent is None:
            raise ValidationError(f"sentence {sent.id!r} missing from gold corpus")
        for entity in sent.entities:
            if entity.source == PROPAGATED_SOURCE:
                entity_pred.add((sent.id, entity.start, entity.end, entity.type))
        for relation in sent.relations:
            if relation.source == PROPAGATED_SOURCE:
                relation_pred.add(_relation_tuple(sent, relation))
        for entity in gold_sent.entities:
            entity_gold.add((sent.id, entity.start, entity.end, entity.type))
        for relation in gold_sent.relations:
            relation_gold.add(_relation_tuple(gold_sent, relation))
    return {
        "entity": report.prf1(
            len(entity_pred & entity_gold), len(entity_pred), len(entity_gold)
        ),
        "relation": report.prf1(
            len(relation_pred & relation_gold), len(relation_pred), len(relation_gold)
        ),
    }
