"""Session fixtures for the bridge tests.

The suite runs against a tiny randomly initialized BERT written to a temp
directory, so it needs no network and each forward pass is milliseconds.
The vocabulary is hand-picked: common test words as single pieces, plus a
few suffix pieces so words like "cats" and "running" split into several
pieces and exercise pooling.
"""

import os

# must be set before transformers is imported anywhere in the suite
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import pytest

VOCAB = (
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "hello", "world", "red", "blue", "green", "cat", "dog", "bird",
    "tree", "sun", "river", "stone", "the", "a", "run", "runs",
    "fast", "slow", "over", "walk", "##s", "##ning", "##ing", ".", ",",
)


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory):
    """Path to a saved 2-layer BERT (dim 32, 48 positions) plus its tokenizer."""
    import torch
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import BertNormalizer
    from tokenizers.pre_tokenizers import BertPreTokenizer
    from tokenizers.processors import TemplateProcessing
    from transformers import BertConfig, BertModel, BertTokenizerFast
    from transformers.utils import logging as hf_logging

    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()

    vocab = {piece: i for i, piece in enumerate(VOCAB)}
    # Building from a vocab dict because current transformers no longer
    # assembles a fast tokenizer out of a bare vocab.txt.
    tk = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    tk.normalizer = BertNormalizer(lowercase=True)
    tk.pre_tokenizer = BertPreTokenizer()
    tk.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    fast = BertTokenizerFast(tokenizer_object=tk)

    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=48,
    )
    torch.manual_seed(0)
    model = BertModel(config)

    path = tmp_path_factory.mktemp("model") / "tiny-bert"
    fast.save_pretrained(str(path))
    model.save_pretrained(str(path))
    return str(path)
