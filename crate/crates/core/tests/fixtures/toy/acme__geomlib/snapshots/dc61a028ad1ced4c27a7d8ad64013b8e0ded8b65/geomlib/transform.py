from .vector import Vector


def project(points, origin, factor):
    """Scale every point away from origin by factor."""

    def _scale(p):
        offset = Vector(p.x - origin.x, p.y - origin.y)
        return origin + offset.scale(factor)

    return [_scale(p) for p in points]


def translate(points, delta):
    return [p + delta for p in points]
