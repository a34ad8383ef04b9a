"""Subword-to-token alignment and long-sentence window planning.

Alignment comes from a fast tokenizer's word mapping.  Every corpus token
must own at least one piece, and the per-token piece ranges must cover the
non-special piece positions contiguously and without overlap, in token
order.  Sentences whose piece sequence exceeds the usable window are
covered by overlapping fixed-size windows; each piece's vector is taken
from the window whose center it sits closest to, since positions near a
window edge see truncated context.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError


def word_piece_ranges(
    word_ids: list[int | None], tokens: tuple[str, ...], sentence_id: str
) -> list[tuple[int, int]]:
    """Per token, the [start, stop) range of its pieces in encoding order.

    ``word_ids`` is the tokenizer's per-position word index (None marks
    special tokens, which belong to no corpus token).
    """
    ranges: list[list[int] | None] = [None] * len(tokens)
    current = None
    for pos, w in enumerate(word_ids):
        if w is None:
            continue
        if not 0 <= w < len(tokens):
            raise ValidationError(
                f"tokenizer reported word index {w} outside the sentence (sentence {sentence_id})"
            )
        if ranges[w] is None:
            if current is not None and w <= current:
                raise ValidationError(
                    f"pieces for token {tokens[w]!r} are out of order (sentence {sentence_id}, token {w})"
                )
            ranges[w] = [pos, pos + 1]
        else:
            if w != current or pos != ranges[w][1]:
                raise ValidationError(
                    f"pieces for token {tokens[w]!r} are not contiguous (sentence {sentence_id}, token {w})"
                )
            ranges[w][1] = pos + 1
        current = w

    for idx, r in enumerate(ranges):
        if r is None:
            raise ValidationError(
                f"tokenizer produced no pieces for token {tokens[idx]!r} "
                f"(sentence {sentence_id}, token {idx})"
            )
    return [(r[0], r[1]) for r in ranges]  # type: ignore[index]


@dataclass(frozen=True)
class WindowPlan:
    """Fixed-size piece windows plus, per piece, the window that keeps it."""

    bounds: tuple[tuple[int, int], ...]
    owner: tuple[int, ...]


def plan_windows(n_pieces: int, window: int, overlap: int = 64) -> WindowPlan:
    """Cover range(n_pieces) with windows of ``window`` pieces stepping by
    window - overlap; the final window is right-aligned so nothing is cut.

    Each piece is owned by the containing window whose center is nearest,
    earlier window on ties.
    """
    if window < 1:
        raise ValidationError("window must fit at least one piece")
    if n_pieces < 1:
        raise ValidationError("cannot window an empty piece sequence")
    if n_pieces <= window:
        return WindowPlan(((0, n_pieces),), (0,) * n_pieces)

    # a window must advance by at least one piece per step
    step = window - min(overlap, window - 1)
    starts = [0]
    while starts[-1] + window < n_pieces:
        starts.append(min(starts[-1] + step, n_pieces - window))
    bounds = tuple((s, s + window) for s in starts)

    owner = []
    for p in range(n_pieces):
        best = best_dist = None
        for wi, (s, e) in enumerate(bounds):
            if s <= p < e:
                dist = abs(p - (s + e - 1) / 2.0)
                if best is None or dist < best_dist:
                    best, best_dist = wi, dist
        owner.append(best)
    return WindowPlan(bounds, tuple(owner))
