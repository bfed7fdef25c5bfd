"""CLI: ``prep parse --input <tsv> --out <dir>`` and
``prep stats --bundle <dir>``. Progress goes to stderr, the summary JSON to
stdout. Exit codes: 0 success, 1 input/validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .bundle import CorpusError, parse_corpus, report_vocab_stats
from .parser import get_parser

log = logging.getLogger("corpusprep")


def _cmd_parse(args) -> int:
    parser = get_parser(args.parser, model=args.model)
    log.info("parser backend: %s", parser.name)
    summary = parse_corpus(args.input, args.out, parser,
                           embeddings_path=args.embeddings, dim=args.dim)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_stats(args) -> int:
    stats = report_vocab_stats(args.bundle)
    print(json.dumps(stats, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prep",
                                     description="Corpus bundle preprocessing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a raw corpus into a bundle")
    p.add_argument("--input", required=True, help="TSV/CSV with id, split, text, label")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.add_argument("--embeddings", default=None,
                   help="pretrained word-vector file (.txt/.vec text or .bin binary)")
    p.add_argument("--dim", type=int, default=300, help="embedding dimensionality")
    p.add_argument("--parser", choices=["auto", "spacy", "heuristic"], default="auto")
    p.add_argument("--model", default="en_core_web_sm", help="spaCy model name")
    p.set_defaults(fn=_cmd_parse)

    p = sub.add_parser("stats", help="summarize an existing bundle")
    p.add_argument("--bundle", required=True)
    p.set_defaults(fn=_cmd_stats)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CorpusError, ValueError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.error("runtime failure: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
