def old_parse(text):
    return [line.split("=") for line in text.splitlines()]


def old_get(data, key):
    for k, v in data:
        if k == key:
            return v
