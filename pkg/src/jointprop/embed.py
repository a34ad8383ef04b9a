"""Token-embedding storage and deterministic feature composition.

A span feature is [start-token vector; end-token vector; width one-hot];
a pair feature is [head span feature; tail span feature; affinity block].
The affinity block is the element-wise product of the two span features
after each has had its start-token block replaced by the average-pooled
embeddings of the tokens strictly between the two spans (a zero vector
when the spans are adjacent or overlap).  That between-span pooling rule
is isolated in :func:`pooled_gap_vector` so alternative readings are a
one-line swap.

Vectors are float32 at this boundary; numerical kernels widen to float64.

On-disk embedding format (little-endian, "JPEM"):

    magic "JPEM" | u32 version = 1 | u32 dim | u64 sentence count
    then per sentence:
    u32 id byte length | id UTF-8 bytes | u32 token count n | n*dim float32

Reads and writes are bit-exact round trips of the float32 payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import ValidationError
from .spans import PairCandidate, SpanCandidate

MAGIC = b"JPEM"
VERSION = 1

# Width buckets: 1, 2, 3, 4, 5-8, 9+.  Fixed one-hot, not learned: the
# core never trains, so the width signal must survive without gradients.
_BUCKET_EDGES = (1, 2, 3, 4, 8)


@dataclass
class TokenEmbeddingStore:
    dim: int
    matrices: dict[str, np.ndarray]

    def matrix(self, sentence_id: str) -> np.ndarray:
        try:
            return self.matrices[sentence_id]
        except KeyError:
            raise ValidationError(f"no embeddings for sentence {sentence_id!r}") from None


def write_embeddings(path, store: TokenEmbeddingStore) -> None:
    """Serialize a store in JPEM layout; float32 payload written bit-exactly."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", VERSION, store.dim, len(store.matrices)))
        for sid, matrix in store.matrices.items():
            raw = sid.encode("utf-8")
            mat = np.ascontiguousarray(matrix, dtype=np.float32)
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", mat.shape[0]))
            fh.write(mat.tobytes())


def _read_exactly(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ValidationError(f"unexpected EOF while reading {what}")
    return data


def read_embeddings(path, corpus: Corpus | None = None) -> TokenEmbeddingStore:
    """Read a JPEM file, checking coverage and token counts against a corpus.

    With ``corpus`` given, every corpus sentence must be present with a
    matching token count; sentences in the file but not in the corpus are
    kept (harmless surplus).  All values must be finite.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValidationError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version, dim, count = struct.unpack("<IIQ", _read_exactly(fh, 16, "header"))
        if version != VERSION:
            raise ValidationError(f"unsupported version {version}")
        if dim <= 0:
            raise ValidationError(f"dimension must be positive, got {dim}")
        matrices: dict[str, np.ndarray] = {}
        for k in range(count):
            (id_len,) = struct.unpack("<I", _read_exactly(fh, 4, f"sentence {k} id length"))
            sid = _read_exactly(fh, id_len, f"sentence {k} id").decode("utf-8")
            (n_tokens,) = struct.unpack("<I", _read_exactly(fh, 4, f"sentence {sid!r} token count"))
            raw = _read_exactly(fh, 4 * n_tokens * dim, f"sentence {sid!r} values")
            mat = np.frombuffer(raw, dtype="<f4").reshape(n_tokens, dim).copy()
            if not np.all(np.isfinite(mat)):
                raise ValidationError(f"non-finite embedding value in sentence {sid!r}")
            if sid in matrices:
                raise ValidationError(f"duplicate sentence id {sid!r} in embedding file")
            matrices[sid] = mat
        if fh.read(1):
            raise ValidationError("trailing bytes after final sentence")

    if corpus is not None:
        for s in corpus.sentences:
            if s.id not in matrices:
                raise ValidationError(f"corpus sentence {s.id!r} missing from embedding file")
            have = matrices[s.id].shape[0]
            want = len(s.tokens)
            if have != want:
                raise ValidationError(f"token-count mismatch {s.id}: {have} vs {want}")
    return TokenEmbeddingStore(dim=int(dim), matrices=matrices)


def width_bucket(width: int, num_buckets: int) -> int:
    """Bucket index for a span width, clamped into the available buckets."""
    for i, edge in enumerate(_BUCKET_EDGES):
        if width <= edge:
            bucket = i
            break
    else:
        bucket = len(_BUCKET_EDGES)
    return min(bucket, num_buckets - 1)


def span_feature(store: TokenEmbeddingStore, span: SpanCandidate, width_buckets: int = 6) -> np.ndarray:
    """[start token; end token; width one-hot], length 2*dim + width_buckets."""
    if width_buckets < 1:
        raise ValidationError("width_buckets must be >= 1")
    mat = store.matrix(span.sentence_id)
    phi = np.zeros(width_buckets, dtype=np.float32)
    phi[width_bucket(span.width, width_buckets)] = 1.0
    return np.concatenate([mat[span.start], mat[span.end], phi])


def pooled_gap_vector(store: TokenEmbeddingStore, head: SpanCandidate, tail: SpanCandidate) -> np.ndarray:
    """Mean embedding of tokens strictly between two spans; zeros when none.

    The gap is direction-agnostic: tokens after the earlier span's end and
    before the later span's start.  Overlapping spans have an empty gap.
    """
    mat = store.matrix(head.sentence_id)
    lo = min(head.end, tail.end)
    hi = max(head.start, tail.start)
    if hi - lo <= 1:
        return np.zeros(store.dim, dtype=np.float32)
    return mat[lo + 1 : hi].mean(axis=0).astype(np.float32)


def pair_feature(
    store: TokenEmbeddingStore,
    pair: PairCandidate,
    head_feature: np.ndarray,
    tail_feature: np.ndarray,
) -> np.ndarray:
    """[head feature; tail feature; affinity], length 3 * span-feature length.

    The affinity block multiplies the two span features element-wise after
    substituting the pooled between-span context for each start-token block.
    """
    gap = pooled_gap_vector(store, pair.head, pair.tail)
    head_aug = head_feature.copy()
    tail_aug = tail_feature.copy()
    head_aug[: store.dim] = gap
    tail_aug[: store.dim] = gap
    affinity = head_aug * tail_aug
    return np.concatenate([head_feature, tail_feature, affinity])


def span_feature_matrix(
    store: TokenEmbeddingStore, spans: list[SpanCandidate], width_buckets: int = 6
) -> np.ndarray:
    rows = [span_feature(store, s, width_buckets) for s in spans]
    return np.vstack(rows) if rows else np.zeros((0, 2 * store.dim + width_buckets), dtype=np.float32)


def pair_feature_matrix(
    store: TokenEmbeddingStore, pairs: list[PairCandidate], width_buckets: int = 6
) -> np.ndarray:
    rows = []
    for p in pairs:
        hf = span_feature(store, p.head, width_buckets)
        tf = span_feature(store, p.tail, width_buckets)
        rows.append(pair_feature(store, p, hf, tf))
    span_len = 2 * store.dim + width_buckets
    return np.vstack(rows) if rows else np.zeros((0, 3 * span_len), dtype=np.float32)
