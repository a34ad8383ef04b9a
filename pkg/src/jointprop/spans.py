"""Candidate enumeration and labeled/unlabeled node partitioning.

Entity candidates are all within-sentence token spans up to a maximum
width; relation candidates are ordered within-sentence span pairs.  The
labeled side of a partition holds only gold positive annotations from the
labeled corpus; unannotated spans of labeled sentences stay out of the
graph entirely, and every candidate from unlabeled sentences goes in.
Null is an abstention at decode time, never a node label here.

All outputs are deterministically ordered (sentence id, then indices).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, Sentence
from .errors import ValidationError


@dataclass(frozen=True, order=True)
class SpanCandidate:
    sentence_id: str
    start: int
    end: int  # inclusive

    @property
    def width(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True, order=True)
class PairCandidate:
    sentence_id: str
    head: SpanCandidate
    tail: SpanCandidate


@dataclass
class NodePartition:
    """Labeled (candidate, class index) seeds plus unlabeled candidates.

    ``dropped_gold`` records gold annotations that could not become seed
    nodes (e.g. spans wider than the enumeration limit) so nothing is
    silently lost.
    """

    labeled: list[tuple[object, int]] = field(default_factory=list)
    unlabeled: list[object] = field(default_factory=list)
    dropped_gold: list[str] = field(default_factory=list)

    @property
    def num_labeled(self) -> int:
        return len(self.labeled)

    @property
    def num_unlabeled(self) -> int:
        return len(self.unlabeled)

    @property
    def num_nodes(self) -> int:
        return len(self.labeled) + len(self.unlabeled)

    def candidates(self) -> list[object]:
        """All node candidates in graph row order: seeds first, then unlabeled."""
        return [cand for cand, _ in self.labeled] + list(self.unlabeled)


def enumerate_spans(sentence: Sentence, max_width: int) -> list[SpanCandidate]:
    """All spans of width 1..min(max_width, n), ordered by (start, end)."""
    if max_width < 1:
        raise ValidationError("max_width must be >= 1")
    n = len(sentence.tokens)
    out = []
    for start in range(n):
        for end in range(start, min(start + max_width, n)):
            out.append(SpanCandidate(sentence.id, start, end))
    return out


def enumerate_pairs(
    spans: list[SpanCandidate],
    restrict_to: set[SpanCandidate] | None = None,
    cap: int | None = None,
) -> tuple[list[PairCandidate], bool]:
    """Ordered same-sentence pairs (head, tail), head != tail.

    When ``restrict_to`` is given both endpoints must belong to it.  ``cap``
    bounds the pair count per sentence, keeping enumeration order; the
    second element of the result reports whether any sentence was truncated.
    """
    by_sentence: dict[str, list[SpanCandidate]] = {}
    for span in spans:
        if restrict_to is not None and span not in restrict_to:
            continue
        by_sentence.setdefault(span.sentence_id, []).append(span)

    pairs: list[PairCandidate] = []
    truncated = False
    for sid in sorted(by_sentence):
        group = sorted(by_sentence[sid], key=lambda s: (s.start, s.end))
        emitted = 0
        for head in group:
            for tail in group:
                if head == tail:
                    continue
                if cap is not None and emitted >= cap:
                    truncated = True
                    break
                pairs.append(PairCandidate(sid, head, tail))
                emitted += 1
            if cap is not None and emitted >= cap and truncated:
                break
    return pairs, truncated


def gold_entity_spans(sentence: Sentence) -> list[tuple[SpanCandidate, str]]:
    return [
        (SpanCandidate(sentence.id, e.start, e.end), e.type)
        for e in sentence.entities
    ]


def partition_entity_nodes(
    candidates: list[SpanCandidate],
    labeled_corpus: Corpus,
    catalog_entity_types,
    max_width: int,
) -> NodePartition:
    """Seeds from labeled-corpus gold entities; unlabeled candidates from the rest.

    Candidates belonging to labeled sentences that are not gold entities are
    excluded.  Gold spans wider than ``max_width`` are recorded in
    ``dropped_gold`` instead of becoming seeds.
    """
    part = NodePartition()
    class_index = {name: i for i, name in enumerate(catalog_entity_types)}
    labeled_ids = {s.id for s in labeled_corpus.sentences}

    seeds: list[tuple[SpanCandidate, int]] = []
    for sent in labeled_corpus.sentences:
        for span, type_name in gold_entity_spans(sent):
            if span.width > max_width:
                part.dropped_gold.append(
                    f"sentence {sent.id!r}: gold entity span ({span.start}, {span.end}) "
                    f"wider than {max_width}"
                )
                continue
            seeds.append((span, class_index[type_name]))
    seeds.sort(key=lambda item: (item[0], item[1]))
    part.labeled = seeds

    part.unlabeled = sorted(c for c in candidates if c.sentence_id not in labeled_ids)
    return part


def partition_relation_nodes(
    pairs: list[PairCandidate],
    labeled_corpus: Corpus,
    catalog_relation_types,
    max_width: int,
) -> NodePartition:
    """Seeds from labeled-corpus gold relations; unlabeled pairs from the rest.

    Gold relations whose endpoint spans exceed ``max_width``, or whose two
    endpoints are the identical span, go to ``dropped_gold``.
    """
    part = NodePartition()
    class_index = {name: i for i, name in enumerate(catalog_relation_types)}
    labeled_ids = {s.id for s in labeled_corpus.sentences}

    seeds: list[tuple[PairCandidate, int]] = []
    for sent in labeled_corpus.sentences:
        for rel in sent.relations:
            head_e = sent.entities[rel.head]
            tail_e = sent.entities[rel.tail]
            head = SpanCandidate(sent.id, head_e.start, head_e.end)
            tail = SpanCandidate(sent.id, tail_e.start, tail_e.end)
            if head.width > max_width or tail.width > max_width:
                part.dropped_gold.append(
                    f"sentence {sent.id!r}: gold relation endpoint wider than {max_width}"
                )
                continue
            if head == tail:
                part.dropped_gold.append(
                    f"sentence {sent.id!r}: gold relation endpoints are the identical span"
                )
                continue
            seeds.append((PairCandidate(sent.id, head, tail), class_index[rel.type]))
    seeds.sort(key=lambda item: (item[0], item[1]))
    part.labeled = seeds

    part.unlabeled = sorted(p for p in pairs if p.sentence_id not in labeled_ids)
    return part
