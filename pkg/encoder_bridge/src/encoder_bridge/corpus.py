"""Minimal reader for the sentence-per-line corpus format.

The bridge needs only ids and token lists; annotation fields are ignored.
The reader is deliberately independent of any other implementation so the
file format itself stays the only shared contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class SentenceTokens:
    id: str
    tokens: tuple[str, ...]


def read_sentences(path) -> list[SentenceTokens]:
    out: list[SentenceTokens] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed JSON at line {lineno}: {exc.msg}")
            if not isinstance(row, dict):
                raise ValidationError(f"expected an object at line {lineno}")
            sid = row.get("id")
            if not isinstance(sid, str) or not sid:
                raise ValidationError(f"missing or invalid 'id' at line {lineno}")
            if sid in seen:
                raise ValidationError(f"duplicate sentence id {sid!r} at line {lineno}")
            tokens = row.get("tokens")
            if not isinstance(tokens, list) or not tokens:
                raise ValidationError(f"missing or empty 'tokens' at line {lineno}")
            if not all(isinstance(t, str) for t in tokens):
                raise ValidationError(f"non-string token at line {lineno}")
            seen.add(sid)
            out.append(SentenceTokens(sid, tuple(tokens)))
    if not out:
        raise ValidationError("corpus has no sentences")
    return out
