"""Dependency-parser backends.

Two backends share one interface (``parse(text) -> list[ParsedToken]``):

* ``SpacyParser`` wraps a pretrained spaCy pipeline and is the backend to
  use for real corpora.
* ``HeuristicParser`` is a small deterministic rule parser with no model
  download. It covers simple declarative English well enough for fixtures
  and offline tests, and keeps the whole pipeline runnable where spaCy
  models are unavailable.

``get_parser("auto")`` prefers spaCy and falls back to the heuristic
backend with a warning.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

log = logging.getLogger("corpusprep")

ROOT_REL = "ROOT"

_TOKEN_RE = re.compile(r"[A-Za-z0-9'\-]+|[^\sA-Za-z0-9]")


@dataclass
class ParsedToken:
    """One parsed token: 0-based position, surface form, coarse POS tag,
    0-based head index (head == index marks the root), relation label."""

    index: int
    text: str
    pos: str
    head: int
    dep: str

    def as_json(self) -> dict:
        return {"i": self.index, "t": self.text, "pos": self.pos,
                "head": self.head, "dep": self.dep}


class ParserError(ValueError):
    """Raised when a sentence cannot be parsed into a valid tree."""


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


# --------------------------------------------------------------------------
# heuristic backend
# --------------------------------------------------------------------------

_DET = {"a", "an", "the", "this", "that", "these", "those"}
_AUX = {"is", "are", "was", "were", "be", "been", "being", "am"}
_ADP = {"with", "of", "in", "on", "at", "by", "for", "from", "to", "about",
        "into", "over", "under"}
_CCONJ = {"and", "or", "but"}
_PRON = {"it", "he", "she", "they", "we", "i", "you", "yes", "no"}
_ADV = {"also", "very", "not", "never", "always", "often"}
_ADJ_SUFFIXES = ("er", "ant", "ent", "al", "ous", "ive", "able", "ible", "ic")
_VERB_SUFFIXES = ("ed", "ing", "es")


class HeuristicParser:
    """Deterministic lexicon-and-suffix parser for simple sentences.

    Tags with the coarse universal POS set and attaches dependents with a
    handful of ordering rules: determiners and adjectives modify the next
    noun, adverbs the verb, prepositions hang off the preceding nominal and
    govern the following noun as their object.
    """

    name = "heuristic"

    def tag(self, word: str, position: int) -> str:
        w = word.lower()
        if not w[0].isalnum():
            return "PUNCT"
        if w in _DET:
            return "DET"
        if w in _AUX:
            return "AUX"
        if w in _ADP:
            return "ADP"
        if w in _CCONJ:
            return "CCONJ"
        if w in _ADV or w.endswith("ly"):
            return "ADV"
        if w in _PRON:
            return "PRON"
        if w.isdigit():
            return "NUM"
        if any(w.endswith(s) for s in _ADJ_SUFFIXES) and len(w) > 4:
            return "ADJ"
        if any(w.endswith(s) for s in _VERB_SUFFIXES) and len(w) > 4 and position > 0:
            return "VERB"
        return "NOUN"

    def parse(self, text: str) -> list[ParsedToken]:
        words = tokenize(text)
        if not words:
            raise ParserError("empty sentence")
        tags = [self.tag(w, i) for i, w in enumerate(words)]
        n = len(words)

        def next_nominal(start: int) -> int | None:
            for j in range(start, n):
                if tags[j] in ("NOUN", "PRON", "NUM", "PROPN"):
                    return j
            return None

        root = next((i for i, t in enumerate(tags) if t in ("AUX", "VERB")), 0)
        heads = [root] * n
        deps = [""] * n
        heads[root], deps[root] = root, ROOT_REL

        subject_found = False
        last_nominal = None
        open_prep = None
        for i in range(n):
            if i == root:
                last_nominal = None
                continue
            tag = tags[i]
            if tag == "DET":
                target = next_nominal(i + 1)
                heads[i], deps[i] = (target, "det") if target is not None else (root, "det")
            elif tag == "ADJ":
                target = next_nominal(i + 1)
                heads[i], deps[i] = (target, "amod") if target is not None else (root, "amod")
            elif tag == "ADV":
                heads[i], deps[i] = root, "advmod"
            elif tag == "ADP":
                heads[i], deps[i] = (last_nominal if last_nominal is not None else root), "prep"
                open_prep = i
            elif tag in ("NOUN", "PRON", "NUM", "PROPN"):
                if open_prep is not None:
                    heads[i], deps[i] = open_prep, "pobj"
                    open_prep = None
                elif i < root and not subject_found:
                    heads[i], deps[i] = root, "nsubj"
                    subject_found = True
                elif tags[root] == "AUX":
                    heads[i], deps[i] = root, "attr"
                else:
                    heads[i], deps[i] = root, "dobj"
                last_nominal = i
            elif tag == "CCONJ":
                heads[i], deps[i] = root, "cc"
            elif tag == "PUNCT":
                heads[i], deps[i] = root, "punct"
            else:
                heads[i], deps[i] = root, "dep"

        return [ParsedToken(i, words[i], tags[i], heads[i], deps[i]) for i in range(n)]


# --------------------------------------------------------------------------
# spaCy backend
# --------------------------------------------------------------------------

class SpacyParser:
    """Pretrained statistical parser via spaCy; requires an installed model
    (for example en_core_web_sm)."""

    name = "spacy"

    def __init__(self, model: str = "en_core_web_sm"):
        import spacy  # deferred so the package works without it

        self.nlp = spacy.load(model, disable=["ner", "lemmatizer"])

    def parse(self, text: str) -> list[ParsedToken]:
        doc = self.nlp(text)
        tokens = [t for t in doc if not t.is_space]
        if not tokens:
            raise ParserError("empty sentence")
        index_of = {t.i: k for k, t in enumerate(tokens)}
        out = []
        for k, t in enumerate(tokens):
            head = k if t.head.i == t.i or t.dep_ == "ROOT" else index_of[t.head.i]
            dep = ROOT_REL if head == k else t.dep_
            out.append(ParsedToken(k, t.text, t.pos_, head, dep))
        return out


def get_parser(kind: str = "auto", model: str = "en_core_web_sm"):
    """Resolve a parser backend: spacy | heuristic | auto."""
    if kind == "heuristic":
        return HeuristicParser()
    if kind == "spacy":
        return SpacyParser(model)
    if kind == "auto":
        try:
            return SpacyParser(model)
        except Exception:
            log.warning("spaCy model unavailable; falling back to the heuristic parser")
            return HeuristicParser()
    raise ValueError(f"unknown parser backend {kind!r}")
