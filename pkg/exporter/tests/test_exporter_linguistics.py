import pytest

from semcom_exporter import CAPTIONS, annotate, tag, tokenize
from semcom_exporter.linguistics import LinguisticsError


def test_tokenize_splits_trailing_punctuation():
    assert tokenize("A blue car driving through the city.") == [
        "A", "blue", "car", "driving", "through", "the", "city", "."]


def test_tokenize_keeps_inner_words():
    assert tokenize("hello, world!") == ["hello", ",", "world", "!"]


def test_tag_examples():
    assert tag("the", 1) == "X"
    assert tag(".", 7) == "X"
    assert tag("through", 4) == "ADP"
    assert tag("blue", 1) == "ADJ"
    assert tag("driving", 3) == "VERB"
    assert tag("perched", 3) == "VERB"
    assert tag("three", 0) == "NUM"
    assert tag("quietly", 2) == "ADV"
    assert tag("Elsinore", 4) == "PROPN"
    assert tag("car", 2) == "NN"
    assert tag("Horses", 0) == "NN"  # sentence-initial capital is not a name


def test_blue_car_annotation():
    words = annotate("A blue car driving through the city.")
    assert len(words) == 8
    assert sum(1 for w in words if w.pos != "X") == 5
    root = [w for w in words if w.head_index == -1]
    assert len(root) == 1 and root[0].text == "driving" and root[0].pos == "VERB"


def test_adjective_attaches_to_following_noun():
    words = annotate("A blue car driving through the city.")
    by_text = {w.text: w for w in words}
    assert by_text["blue"].head_index == by_text["car"].index
    assert by_text["city"].head_index == by_text["through"].index


def test_empty_prompt_rejected():
    with pytest.raises(LinguisticsError):
        annotate("")
    with pytest.raises(LinguisticsError):
        annotate("   ")


def test_punctuation_only_prompt_rejected():
    with pytest.raises(LinguisticsError):
        annotate("... !!")


def test_corpus_annotations_are_well_formed():
    for caption in CAPTIONS:
        words = annotate(caption)
        m = len(words)
        assert [w.index for w in words] == list(range(m))
        assert sum(1 for w in words if w.head_index == -1) == 1
        for w in words:
            assert w.head_index == -1 or 0 <= w.head_index < m
            assert w.head_index != w.index
            assert w.pos in {"NN", "PROPN", "NUM", "ADJ", "VERB", "ADV", "ADP", "X"}
        assert any(w.pos != "X" for w in words)
