def strip_comment(line):
    for marker in ("#", ";"):
        pos = line.find(marker)
        if pos >= 0:
            line = line[:pos]
    return line


def quote(value):
    return '"' + value.replace('"', '\\"') + '"'


def unquote(value):
    if len(value) >= 2 and value[0] == value[-1] == '"':
        return value[1:-1]
    return value


def split_pair(line):
    key, _, value = line.partition("=")
    return key, value
