"""Corpus encoding with a frozen pretrained transformer.

One output vector per corpus token: the mean (default) or first of its
subword piece vectors from the model's final hidden layer.  Inference is
pinned for reproducibility: eval mode, no gradients, single-threaded
torch, float32 end to end, sentences processed in corpus order.  The
same inputs therefore produce byte-identical output files.

Sentences whose piece count exceeds the usable window are encoded in
overlapping windows and stitched center-priority; their ids go to a
sidecar log next to the output file.
"""

from __future__ import annotations

import struct

import numpy as np

from .align import plan_windows, word_piece_ranges
from .corpus import read_sentences
from .errors import ValidationError

MAGIC = b"JPEM"
FORMAT_VERSION = 1
WINDOW_OVERLAP = 64
BATCH_SENTENCES = 16
POOLING_MODES = ("mean", "first")


def load_encoder(model_id: str):
    """Tokenizer and model, frozen for inference."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    if not getattr(tokenizer, "is_fast", False):
        raise ValidationError(
            "a fast tokenizer is required for subword alignment; "
            f"{model_id!r} does not provide one"
        )
    model = AutoModel.from_pretrained(model_id)
    model.eval()
    torch.set_num_threads(1)
    return tokenizer, model


def _pool(piece_vectors: np.ndarray, ranges, pooling: str) -> np.ndarray:
    rows = np.empty((len(ranges), piece_vectors.shape[1]), dtype=np.float32)
    for i, (start, stop) in enumerate(ranges):
        if pooling == "first":
            rows[i] = piece_vectors[start]
        else:
            rows[i] = piece_vectors[start:stop].mean(axis=0)
    return rows


def _encode_batch(sentences, tokenizer, model, pooling):
    import torch

    encoded = tokenizer(
        [list(s.tokens) for s in sentences],
        is_split_into_words=True,
        padding=True,
        return_tensors="pt",
    )
    with torch.inference_mode():
        hidden = model(**encoded).last_hidden_state
    out = {}
    for i, sent in enumerate(sentences):
        ranges = word_piece_ranges(encoded.word_ids(i), sent.tokens, sent.id)
        vectors = hidden[i].numpy().astype(np.float32, copy=False)
        out[sent.id] = _pool(vectors, ranges, pooling)
    return out


def _encode_windowed(sent, tokenizer, model, pooling, window):
    import torch

    raw = tokenizer(list(sent.tokens), is_split_into_words=True, add_special_tokens=False)
    ids = raw["input_ids"]
    ranges = word_piece_ranges(raw.word_ids(), sent.tokens, sent.id)
    plan = plan_windows(len(ids), window, WINDOW_OVERLAP)

    # Tokenizers stopped exposing id-level special-token assembly, so the
    # wrapper is recovered from a full encoding: whatever sits before the
    # first real piece and after the last one.
    full = tokenizer(list(sent.tokens), is_split_into_words=True)
    full_ids = full["input_ids"]
    real = [pos for pos, w in enumerate(full.word_ids()) if w is not None]
    prefix = full_ids[: real[0]]
    suffix = full_ids[real[-1] + 1 :]
    if full_ids[real[0] : real[-1] + 1] != ids:
        raise ValidationError(
            "cannot reassemble windows: the tokenizer interleaves special "
            f"tokens with sentence pieces (sentence {sent.id})"
        )

    # every window has the same piece count, so one rectangular batch
    batch = torch.tensor(
        [prefix + ids[start:stop] + suffix for start, stop in plan.bounds],
        dtype=torch.long,
    )
    with torch.inference_mode():
        hidden = model(input_ids=batch, attention_mask=torch.ones_like(batch)).last_hidden_state
    hidden = hidden.numpy().astype(np.float32, copy=False)

    pieces = np.empty((len(ids), hidden.shape[2]), dtype=np.float32)
    for p in range(len(ids)):
        wi = plan.owner[p]
        pieces[p] = hidden[wi, len(prefix) + p - plan.bounds[wi][0]]
    return _pool(pieces, ranges, pooling), len(plan.bounds)


def _write_file(path, dim, sentences, matrices) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", FORMAT_VERSION, dim, len(sentences)))
        for sent in sentences:
            ident = sent.id.encode("utf-8")
            mat = matrices[sent.id]
            fh.write(struct.pack("<I", len(ident)))
            fh.write(ident)
            fh.write(struct.pack("<I", mat.shape[0]))
            fh.write(np.ascontiguousarray(mat, dtype="<f4").tobytes())


def encode_corpus(corpus_path, model_id: str, out_path, pooling: str = "mean", max_len: int = 512) -> dict:
    """Embed every corpus token and write the binary embedding file.

    Returns a small report: sentence count, vector dimension, and the ids
    of sentences that needed windowing (also written to ``out_path.log``).
    """
    if pooling not in POOLING_MODES:
        raise ValidationError(f"pooling must be one of {POOLING_MODES}")
    if max_len < 4:
        raise ValidationError("max_len must be at least 4")

    sentences = read_sentences(corpus_path)
    tokenizer, model = load_encoder(model_id)
    limit = min(max_len, int(getattr(model.config, "max_position_embeddings", max_len)))
    window = limit - tokenizer.num_special_tokens_to_add(False)
    if window < 1:
        raise ValidationError(f"max_len {max_len} leaves no room for sentence pieces")

    short, long = [], []
    for sent in sentences:
        full_len = len(
            tokenizer(list(sent.tokens), is_split_into_words=True)["input_ids"]
        )
        (short if full_len <= limit else long).append(sent)

    matrices: dict[str, np.ndarray] = {}
    for batch_start in range(0, len(short), BATCH_SENTENCES):
        matrices.update(
            _encode_batch(short[batch_start : batch_start + BATCH_SENTENCES], tokenizer, model, pooling)
        )
    windowed = []
    for sent in long:
        matrices[sent.id], n_windows = _encode_windowed(sent, tokenizer, model, pooling, window)
        windowed.append((sent.id, n_windows))

    dim = int(next(iter(matrices.values())).shape[1])
    _write_file(out_path, dim, sentences, matrices)

    log_path = None
    if windowed:
        log_path = str(out_path) + ".log"
        with open(log_path, "w", encoding="utf-8") as fh:
            for sid, n_windows in windowed:
                fh.write(
                    f"sentence {sid}: encoded in {n_windows} windows "
                    f"(window {window} pieces, overlap {WINDOW_OVERLAP})\n"
                )

    return {
        "sentences": len(sentences),
        "dim": dim,
        "windowed": [sid for sid, _ in windowed],
        "log": log_path,
    }
