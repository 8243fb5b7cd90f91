"""Integer track-grid geometry primitives.

All coordinates are in track units. A Rect covers the half-open cell range
[x, x+w) x [y, y+h); two rects that share only an edge or a corner do not
overlap (abutment is legal).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

Cell = tuple[int, int]


class Side(str, Enum):
    NORTH = "north"
    SOUTH = "south"
    EAST = "east"
    WEST = "west"


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def contains_cell(self, cell: Cell) -> bool:
        cx, cy = cell
        return self.x <= cx < self.x2 and self.y <= cy < self.y2

    def cells(self):
        """Iterate every covered cell. Intended for small oracle-style checks."""
        for cx in range(self.x, self.x2):
            for cy in range(self.y, self.y2):
                yield (cx, cy)

    def expanded(self, margin: int) -> "Rect":
        return Rect(self.x - margin, self.y - margin, self.w + 2 * margin, self.h + 2 * margin)

    def translated(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)


def overlaps(a: Rect, b: Rect) -> bool:
    """True iff the interiors of a and b intersect.

    Shared edges and corners are not overlap. Zero-area rects have empty
    interiors and never overlap anything.
    """
    return a.x < b.x2 and b.x < a.x2 and a.y < b.y2 and b.y < a.y2


def separated(a: Rect, b: Rect, gap: int) -> bool:
    """True iff at least `gap` empty tracks lie between a and b on some axis."""
    return (
        b.x >= a.x2 + gap
        or a.x >= b.x2 + gap
        or b.y >= a.y2 + gap
        or a.y >= b.y2 + gap
    )


def bounding_rect(rects: list[Rect]) -> Rect:
    if not rects:
        raise ValueError("bounding_rect of empty list")
    x1 = min(r.x for r in rects)
    y1 = min(r.y for r in rects)
    x2 = max(r.x2 for r in rects)
    y2 = max(r.y2 for r in rects)
    return Rect(x1, y1, x2 - x1, y2 - y1)


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))
