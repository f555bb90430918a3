def wrap_text(text, width=70):
    lines = []
    current = ""
    for word in text.split():
        if current and len(current) + len(word) + 1 > width:
            lines.append(current)
            current = word
        else:
            current = (current + " " + word).strip()
    if current:
        lines.append(current)
    return "\n".join(lines)


def indent(text, prefix="    "):
    return "\n".join(prefix + line for line in text.splitlines())
