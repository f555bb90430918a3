import re
import unicodedata

_WORD = re.compile(r"\w+")


def normalize(text, form="NFC"):
    """Return text in a canonical unicode form with collapsed spaces."""
    text = unicodedata.normalize(form, text)
    return " ".join(text.split())


def tokenize(text, lower=False):
    words = _WORD.findall(text)
    if lower:
        words = [w.lower() for w in words]
    return words


class Counter:
    """Counts word frequencies."""

    def __init__(self, lower=True):
        self.lower = lower
        self.counts = {}

    def add(self, text):
        for word in tokenize(text, lower=self.lower):
            self.counts[word] = self.counts.get(word, 0) + 1
        return self

    def most_common(self, n=None):
        items = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return items if n is None else items[:n]
