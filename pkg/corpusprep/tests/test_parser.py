import pytest

from corpusprep.parser import (
    HeuristicParser, ParserError, get_parser, tokenize,
)

EXAMPLE_SENTENCE = "Gas is also a cleaner fuel with resultant environmental benefits"


@pytest.fixture(scope="module")
def parser():
    return HeuristicParser()


def test_tokenize_splits_words_and_punct():
    assert tokenize("It works, really.") == ["It", "works", ",", "really", "."]


class TestAppendixSentence:
    def test_token_count_and_root(self, parser):
        toks = parser.parse(EXAMPLE_SENTENCE)
        assert len(toks) == 10
        roots = [t for t in toks if t.head == t.index]
        assert len(roots) == 1 and roots[0].text == "is"
        assert roots[0].dep == "ROOT"

    def test_expected_dependency_edges(self, parser):
        toks = parser.parse(EXAMPLE_SENTENCE)
        by_text = {t.text: t for t in toks}
        # subject: is -> Gas (nsubj)
        assert by_text["Gas"].dep == "nsubj" and toks[by_text["Gas"].head].text == "is"
        # adjectival modifier: fuel -> cleaner (amod)
        assert by_text["cleaner"].dep == "amod"
        assert toks[by_text["cleaner"].head].text == "fuel"
        assert by_text["environmental"].dep == "amod"
        assert toks[by_text["environmental"].head].text == "benefits"

    def test_full_head_vector(self, parser):
        toks = parser.parse(EXAMPLE_SENTENCE)
        assert [t.head for t in toks] == [1, 1, 1, 5, 5, 1, 5, 9, 9, 6]


class TestEdgeCases:
    def test_single_token_sentence(self, parser):
        toks = parser.parse("Yes")
        assert len(toks) == 1
        assert toks[0].head == 0 and toks[0].dep == "ROOT"

    def test_empty_sentence_rejected(self, parser):
        with pytest.raises(ParserError):
            parser.parse("   ")

    def test_parse_is_deterministic(self, parser):
        a = parser.parse(EXAMPLE_SENTENCE)
        b = parser.parse(EXAMPLE_SENTENCE)
        assert [t.as_json() for t in a] == [t.as_json() for t in b]

    def test_every_parse_is_a_tree(self, parser):
        sentences = [
            "The company reduced emissions",
            "Our products are sustainable and green",
            "We planted a tree in the park",
            "Climate change is not a hoax",
            "The new report shows very strong results for the green fund",
        ]
        for s in sentences:
            toks = parser.parse(s)
            roots = [t for t in toks if t.head == t.index]
            assert len(roots) == 1, s
            root = roots[0].index
            for t in toks:
                cur, hops = t.index, 0
                while cur != root:
                    cur = toks[cur].head
                    hops += 1
                    assert hops <= len(toks), f"cycle in parse of {s!r}"


def test_get_parser_backends():
    assert get_parser("heuristic").name == "heuristic"
    # auto must resolve to something usable even without spaCy installed
    assert get_parser("auto").name in ("spacy", "heuristic")
    with pytest.raises(ValueError):
        get_parser("stanford")
