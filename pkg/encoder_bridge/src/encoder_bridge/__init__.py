"""Contextual token embeddings for span-annotation corpora.

Reads the sentence-per-line JSONL corpus format, runs a frozen pretrained
transformer, pools subword vectors into one vector per corpus token, and
writes the binary embedding format the propagation engine consumes.  The
two packages share only those file formats, never code.
"""

from .align import WindowPlan, plan_windows, word_piece_ranges
from .corpus import SentenceTokens, read_sentences
from .encode import encode_corpus, load_encoder
from .errors import BridgeError, ValidationError
from .verify import verify_file

__version__ = "0.1.0"

__all__ = [
    "BridgeError",
    "SentenceTokens",
    "ValidationError",
    "WindowPlan",
    "encode_corpus",
    "load_encoder",
    "plan_windows",
    "read_sentences",
    "verify_file",
    "word_piece_ranges",
]
