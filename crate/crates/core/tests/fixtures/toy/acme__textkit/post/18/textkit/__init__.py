"""Small text utilities."""

from .core import normalize, tokenize
from .wrapping import wrap_text
from .slug import slugify

__all__ = ["normalize", "tokenize", "wrap_text"]
