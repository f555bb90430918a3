import re

from .core import normalize


def slugify(text):
    text = normalize(text).lower()
    return re.sub(r"[^a-z0-9]+", "-", text).strip("-")
