import math

from .vector import Vector


class Circle:
    def __init__(self, center, radius):
        self.center = center
        self.radius = radius

    def area(self):
        return math.pi * self.radius ** 2

    def perimeter(self):
        return 2 * math.pi * self.radius


class Rect:
    def __init__(self, origin, width, height):
        self.origin = origin
        self.width = width
        self.height = height

    def area(self):
        return self.width * self.height

    def legacy_area(self):
        # kept for 1.x callers
        return self.area()

    def contains(self, point):
        dx = point.x - self.origin.x
        dy = point.y - self.origin.y
        return 0 <= dx <= self.width and 0 <= dy <= self.height


def bounding_box(
    points,
    *,
    strict=False,
):
    if not points:
        if strict:
            raise ValueError("no points")
        return None
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    origin = Vector(min(xs), min(ys))
    return Rect(origin, max(xs) - origin.x, max(ys) - origin.y)
