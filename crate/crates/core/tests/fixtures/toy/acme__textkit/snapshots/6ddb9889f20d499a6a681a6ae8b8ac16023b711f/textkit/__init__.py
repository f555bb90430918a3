"""Small text utilities."""

from .core import normalize, tokenize
from .wrap import wrap_text

__all__ = ["normalize", "tokenize", "wrap_text"]
