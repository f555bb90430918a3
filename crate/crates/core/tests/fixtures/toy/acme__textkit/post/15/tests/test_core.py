from textkit.core import normalize, tokenize


def test_normalize():
    assert normalize("a  b") == "a b"


def test_tokenize():
    assert tokenize("a b") == ["a", "b"]


def test_tokenize_lower():
    assert tokenize("A b", lower=True) == ["a", "b"]
