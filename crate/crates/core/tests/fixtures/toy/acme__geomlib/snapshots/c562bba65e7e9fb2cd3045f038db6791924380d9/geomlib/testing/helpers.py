from geomlib.vector import Vector


def unit_square():
    return [Vector(0, 0), Vector(1, 1)]
