from .errors import MissingKey
from .util import split_pair, strip_comment


class Parser:
    def __init__(self, strict=False):
        self.strict = strict
        self.sections = {}

    def parse(self, text):
        section = None
        for raw in text.splitlines():
            section = self._parse_line(raw, section)
        return self.sections

    def _parse_line(self, raw, section):
        line = strip_comment(raw).strip()
        if not line:
            return section
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            self.sections.setdefault(section, {})
            return section
        key, value = split_pair(line)
        self.sections.setdefault(section, {})[key] = value
        return section

    def get(self, section, key, default=None):
        try:
            return self.sections[section][key]
        except KeyError:
            if self.strict:
                raise MissingKey(key)
            return default
