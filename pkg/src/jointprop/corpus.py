"""Corpus loading, validation, splitting, and the on-disk JSONL format.

One sentence object per line, UTF-8:

    {"id": "doc3#s1", "tokens": ["a", "b"],
     "entities": [{"start": 0, "end": 0, "type": "Method"}],
     "relations": [{"head": 0, "tail": 1, "type": "Used-for"}],
     "labeled": true}

Token span indices are inclusive on both ends.  ``entities``/``relations``
default to empty and ``labeled`` to true when absent; unknown keys are
ignored.  Annotations on unlabeled sentences are legal: they are held-out
gold, retained for scoring but never read by propagation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace

from .errors import ValidationError


@dataclass(frozen=True)
class Entity:
    start: int
    end: int  # inclusive
    type: str
    source: str | None = None
    confidence: float | None = None

    def to_json(self) -> dict:
        obj = {"start": self.start, "end": self.end, "type": self.type}
        if self.source is not None:
            obj["source"] = self.source
        if self.confidence is not None:
            obj["confidence"] = self.confidence
        return obj


@dataclass(frozen=True)
class Relation:
    head: int  # index into the sentence's entities list
    tail: int
    type: str
    source: str | None = None
    confidence: float | None = None

    def to_json(self) -> dict:
        obj = {"head": self.head, "tail": self.tail, "type": self.type}
        if self.source is not None:
            obj["source"] = self.source
        if self.confidence is not None:
            obj["confidence"] = self.confidence
        return obj


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[str, ...]
    entities: tuple[Entity, ...] = ()
    relations: tuple[Relation, ...] = ()
    labeled: bool = True

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "tokens": list(self.tokens),
            "entities": [e.to_json() for e in self.entities],
            "relations": [r.to_json() for r in self.relations],
            "labeled": self.labeled,
        }


@dataclass(frozen=True)
class ClassCatalog:
    """Ordered class name lists; column indices are stable within a run.

    The null class is not listed: it is realized as abstention, never as a
    column in any label matrix.
    """

    entity_types: tuple[str, ...] = ()
    relation_types: tuple[str, ...] = ()

    def entity_index(self, name: str) -> int:
        return self.entity_types.index(name)

    def relation_index(self, name: str) -> int:
        return self.relation_types.index(name)


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...] = ()
    catalog: ClassCatalog = field(default_factory=ClassCatalog)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def sentence(self, sentence_id: str) -> Sentence:
        for s in self.sentences:
            if s.id == sentence_id:
                return s
        raise KeyError(sentence_id)

    @property
    def labeled_sentences(self) -> tuple[Sentence, ...]:
        return tuple(s for s in self.sentences if s.labeled)

    @property
    def unlabeled_sentences(self) -> tuple[Sentence, ...]:
        return tuple(s for s in self.sentences if not s.labeled)


def build_catalog(sentences) -> ClassCatalog:
    """Catalog from the union of observed class names, in first-seen order."""
    entity_types: list[str] = []
    relation_types: list[str] = []
    for s in sentences:
        for e in s.entities:
            if e.type not in entity_types:
                entity_types.append(e.type)
        for r in s.relations:
            if r.type not in relation_types:
                relation_types.append(r.type)
    return ClassCatalog(tuple(entity_types), tuple(relation_types))


def _parse_sentence(obj: dict, line_no: int) -> Sentence:
    if not isinstance(obj, dict):
        raise ValidationError(f"expected a JSON object at line {line_no}")
    try:
        sid = obj["id"]
        tokens = obj["tokens"]
    except KeyError as exc:
        raise ValidationError(f"missing key {exc.args[0]!r} at line {line_no}") from None
    if not isinstance(sid, str) or not isinstance(tokens, list):
        raise ValidationError(f"bad id/tokens types at line {line_no}")
    n = len(tokens)

    entities = []
    for e in obj.get("entities", []):
        try:
            ent = Entity(
                start=int(e["start"]),
                end=int(e["end"]),
                type=str(e["type"]),
                source=e.get("source"),
                confidence=e.get("confidence"),
            )
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"malformed entity object at line {line_no}") from None
        if not (0 <= ent.start <= ent.end < n):
            raise ValidationError(f"entity index out of range at line {line_no}")
        entities.append(ent)

    relations = []
    for r in obj.get("relations", []):
        try:
            rel = Relation(
                head=int(r["head"]),
                tail=int(r["tail"]),
                type=str(r["type"]),
                source=r.get("source"),
                confidence=r.get("confidence"),
            )
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"malformed relation object at line {line_no}") from None
        if not (0 <= rel.head < len(entities)) or not (0 <= rel.tail < len(entities)):
            raise ValidationError(f"relation references missing entity at line {line_no}")
        if rel.head == rel.tail:
            raise ValidationError(f"relation head equals tail at line {line_no}")
        relations.append(rel)

    return Sentence(
        id=sid,
        tokens=tuple(str(t) for t in tokens),
        entities=tuple(entities),
        relations=tuple(relations),
        labeled=bool(obj.get("labeled", True)),
    )


def load_corpus(path) -> Corpus:
    """Load a JSONL corpus; catalogs are the union of observed class names.

    Raises ValidationError on malformed lines (with the line number),
    out-of-range entity spans, dangling relation references, and duplicate
    sentence ids.  Sentence order is preserved.
    """
    sentences: list[Sentence] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed JSON at line {line_no}: {exc.msg}") from None
            sent = _parse_sentence(obj, line_no)
            if sent.id in seen:
                raise ValidationError(f"duplicate sentence id {sent.id!r} at line {line_no}")
            seen.add(sent.id)
            sentences.append(sent)
    return Corpus(tuple(sentences), build_catalog(sentences))


def save_corpus(corpus: Corpus, path) -> None:
    """Write the canonical JSONL form (stable key order, compact separators)."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in corpus.sentences:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False, separators=(", ", ": ")))
            fh.write("\n")


def validate_corpus(corpus: Corpus) -> list[str]:
    """Return human-readable invariant violations; empty list means clean.

    Violations are data, not failures: overlapping entities are legal, and
    annotations on unlabeled sentences are legal held-out gold.
    """
    violations: list[str] = []
    seen_ids: set[str] = set()
    for s in corpus.sentences:
        if s.id in seen_ids:
            violations.append(f"duplicate sentence id {s.id!r}")
        seen_ids.add(s.id)
        n = len(s.tokens)
        for e in s.entities:
            if not (0 <= e.start <= e.end < n):
                violations.append(f"sentence {s.id!r}: entity span ({e.start}, {e.end}) out of range")
        for r in s.relations:
            if not (0 <= r.head < len(s.entities)) or not (0 <= r.tail < len(s.entities)):
                violations.append(f"sentence {s.id!r}: relation references missing entity")
            elif r.head == r.tail:
                violations.append(f"sentence {s.id!r}: relation head equals tail")
    return violations


def _document_of(sentence_id: str) -> str:
    if "#" not in sentence_id:
        raise ValidationError(
            f"sentence id {sentence_id!r} lacks a 'doc#sent' document prefix required for unit=document"
        )
    return sentence_id.split("#", 1)[0]


def _unit_classes(sentences) -> set[str]:
    classes: set[str] = set()
    for s in sentences:
        classes.update(f"e:{e.type}" for e in s.entities)
        classes.update(f"r:{r.type}" for r in s.relations)
    return classes


def split_corpus(
    corpus: Corpus,
    labeled_fraction: float,
    seed: int,
    unit: str = "sentence",
) -> tuple[Corpus, Corpus]:
    """Deterministically split into a labeled and an unlabeled corpus.

    ``unit`` is "sentence" or "document"; documents are identified by the
    id prefix before "#" and never straddle the split.  A greedy pass first
    prefers units that introduce classes not yet covered by the labeled
    side, then the remaining quota is filled in seeded-shuffle order.  The
    labeled side keeps its gold and ``labeled=True``; the unlabeled side
    keeps its gold too (held out for scoring only) with ``labeled=False``.
    """
    if len(corpus) == 0:
        raise ValidationError("cannot split an empty corpus")
    if not (0.0 < labeled_fraction <= 1.0):
        raise ValidationError("labeled_fraction must be in (0, 1]")
    if unit not in ("sentence", "document"):
        raise ValidationError(f"unknown split unit {unit!r}")

    if unit == "sentence":
        units: dict[str, list[Sentence]] = {s.id: [s] for s in corpus.sentences}
    else:
        units = {}
        for s in corpus.sentences:
            units.setdefault(_document_of(s.id), []).append(s)

    n_units = len(units)
    quota = int(labeled_fraction * n_units + 0.5)
    quota = min(quota, n_units)
    if quota == 0:
        raise ValidationError(
            f"labeled_fraction {labeled_fraction} selects zero of {n_units} {unit} units"
        )

    order = sorted(units)
    random.Random(seed).shuffle(order)

    chosen: list[str] = []
    covered: set[str] = set()
    remaining = list(order)
    # Coverage-first pass: repeatedly take the unit introducing the most
    # still-unseen classes (ties fall back to shuffle order).
    while len(chosen) < quota:
        best_key = None
        best_gain = 0
        for key in remaining:
            gain = len(_unit_classes(units[key]) - covered)
            if gain > best_gain:
                best_gain = gain
                best_key = key
        if best_key is None:
            break
        chosen.append(best_key)
        covered |= _unit_classes(units[best_key])
        remaining.remove(best_key)
    for key in remaining:
        if len(chosen) >= quota:
            break
        chosen.append(key)

    chosen_set = set(chosen)
    labeled, unlabeled = [], []
    for s in corpus.sentences:
        key = s.id if unit == "sentence" else _document_of(s.id)
        if key in chosen_set:
            labeled.append(replace(s, labeled=True))
        else:
            unlabeled.append(replace(s, labeled=False))

    return (
        Corpus(tuple(labeled), corpus.catalog),
        Corpus(tuple(unlabeled), corpus.catalog),
    )
