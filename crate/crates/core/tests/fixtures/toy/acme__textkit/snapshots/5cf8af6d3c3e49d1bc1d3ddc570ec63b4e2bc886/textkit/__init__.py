"""Small text utilities."""

from .core import normalize, tokenize
from .wrapping import wrap_text

__all__ = ["normalize", "tokenize", "wrap_text"]
