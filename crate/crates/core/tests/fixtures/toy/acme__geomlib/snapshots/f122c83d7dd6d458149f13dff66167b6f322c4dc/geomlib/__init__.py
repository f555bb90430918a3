from .vector import Vector, dot
from .shapes import Circle, Rect, bounding_box

__version__ = "1.4.0"
