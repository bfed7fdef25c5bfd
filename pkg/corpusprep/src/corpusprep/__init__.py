"""Corpus preprocessing: dependency parsing and embedding extraction into
the portable graph-corpus bundle format."""

from .bundle import parse_corpus, report_vocab_stats
from .parser import ParsedToken, get_parser

__all__ = ["ParsedToken", "get_parser", "parse_corpus", "report_vocab_stats"]

__version__ = "0.1.0"
