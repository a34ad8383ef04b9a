"""Embedding-file validation with a parser independent of the writer.

The reader below decodes the binary layout by hand (int.from_bytes and
numpy.frombuffer, not the writer's struct calls) so a shared encoding bug
cannot hide on both sides.  ``verify_file`` returns a list of problem
strings; an empty list means the file checks out against its corpus.
"""

from __future__ import annotations

import numpy as np

from .corpus import read_sentences

_HEADER = 4 + 4 + 4 + 8


def verify_file(embedding_path, corpus_path) -> list[str]:
    sentences = read_sentences(corpus_path)
    with open(embedding_path, "rb") as fh:
        data = fh.read()

    problems: list[str] = []
    if len(data) < _HEADER:
        return [f"unexpected EOF in header ({len(data)} bytes)"]
    if data[:4] != b"JPEM":
        return [f"bad magic {data[:4]!r}"]
    version = int.from_bytes(data[4:8], "little")
    if version != 1:
        return [f"unsupported version {version}"]
    dim = int.from_bytes(data[8:12], "little")
    if dim == 0:
        problems.append("dimension is zero")
    count = int.from_bytes(data[12:20], "little")
    if count != len(sentences):
        problems.append(f"sentence count {count} does not match corpus ({len(sentences)})")

    offset = _HEADER
    for k in range(min(count, len(sentences))):
        if len(data) - offset < 4:
            problems.append(f"unexpected EOF at sentence {k}")
            return problems
        id_len = int.from_bytes(data[offset : offset + 4], "little")
        offset += 4
        if len(data) - offset < id_len:
            problems.append(f"unexpected EOF at sentence {k}")
            return problems
        try:
            sid = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError:
            problems.append(f"sentence {k}: id is not valid UTF-8")
            return problems
        offset += id_len
        if len(data) - offset < 4:
            problems.append(f"unexpected EOF at sentence {k}")
            return problems
        n_tokens = int.from_bytes(data[offset : offset + 4], "little")
        offset += 4
        body = n_tokens * dim * 4
        if len(data) - offset < body:
            problems.append(f"unexpected EOF at sentence {k}")
            return problems
        matrix = np.frombuffer(data, dtype="<f4", count=n_tokens * dim, offset=offset)
        offset += body

        expected = sentences[k]
        if sid != expected.id:
            problems.append(f"sentence {k}: id {sid!r} does not match corpus id {expected.id!r}")
        elif n_tokens != len(expected.tokens):
            problems.append(
                f"token-count mismatch {sid}: {n_tokens} vs {len(expected.tokens)}"
            )
        bad = np.flatnonzero(~np.isfinite(matrix))
        if bad.size:
            token_index = int(bad[0]) // dim if dim else 0
            problems.append(f"non-finite value, sentence {sid}, token {token_index}")

    if offset < len(data):
        problems.append(f"{len(data) - offset} trailing bytes after final sentence")
    return problems
