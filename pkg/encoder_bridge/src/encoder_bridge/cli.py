"""Command line entry point: encode a corpus into an embedding file."""

from __future__ import annotations

import argparse
import sys

from .encode import encode_corpus
from .errors import ValidationError
from .verify import verify_file


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for bad flags, like any other bad input
        raise ValidationError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="jointprop-encode", description=__doc__)
    parser.add_argument("--corpus", required=True, help="sentence-per-line JSONL corpus")
    parser.add_argument("--model", required=True, help="pretrained model id or local path")
    parser.add_argument("--out", required=True, help="embedding file to write")
    parser.add_argument("--pooling", default="mean", choices=("mean", "first"),
                        help="how to pool a token's subword vectors")
    parser.add_argument("--max-len", type=int, default=512,
                        help="window length in pieces, specials included")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        report = encode_corpus(args.corpus, args.model, args.out,
                               pooling=args.pooling, max_len=args.max_len)
        problems = verify_file(args.out, args.corpus)
        if problems:
            for problem in problems:
                print(f"verify: {problem}", file=sys.stderr)
            return 1
        windowed = len(report["windowed"])
        suffix = f", {windowed} windowed (see {report['log']})" if windowed else ""
        print(f"encoded {report['sentences']} sentences at dim {report['dim']}{suffix}; verify: ok")
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
