"""Grid world: coordinates, walls, connectivity and module observations.

Coordinates are plain ``(x, y)`` integer tuples naming the cell whose bottom
left corner sits at ``(x, y)``.  The interior of a ``w x h`` field is
``0 <= x < w, 0 <= y < h``; the one-cell-thick wall ring sits at
``x in {-1, w}`` or ``y in {-1, h}``.

Orientation is expressed as a number of counter-clockwise quarter turns
``r in {0, 1, 2, 3}``.  Every frame is right handed, so clockwise means the
same thing to every module even though the axes disagree.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Iterator, Optional, Tuple

Coord = Tuple[int, int]
Cells = FrozenSet[Coord]

NEIGHBOURS: Tuple[Coord, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


class GridError(ValueError):
    """Raised for malformed fields, cell sets or observation requests."""


class Cell(enum.IntEnum):
    EMPTY = 0
    MODULE = 1
    WALL = 2


def rotate(v: Coord, r: int) -> Coord:
    """Rotate a vector by ``r`` counter-clockwise quarter turns."""
    x, y = v
    r %= 4
    if r == 0:
        return (x, y)
    if r == 1:
        return (-y, x)
    if r == 2:
        return (-x, -y)
    return (y, -x)


def add(a: Coord, b: Coord) -> Coord:
    return (a[0] + b[0], a[1] + b[1])


def sub(a: Coord, b: Coord) -> Coord:
    return (a[0] - b[0], a[1] - b[1])


def chebyshev(a: Coord, b: Coord = (0, 0)) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


@dataclass(frozen=True)
class LocalFrame:
    """A right-handed frame: local ``v`` sits at world ``origin + rotate(v, rotation)``."""

    origin: Coord = (0, 0)
    rotation: int = 0

    def __post_init__(self) -> None:
        if self.rotation not in (0, 1, 2, 3):
            raise GridError(f"rotation must be a quarter-turn count, got {self.rotation}")

    def to_world(self, v: Coord) -> Coord:
        return add(self.origin, rotate(v, self.rotation))

    def to_local(self, p: Coord) -> Coord:
        return rotate(sub(p, self.origin), -self.rotation)

    def vec_to_world(self, v: Coord) -> Coord:
        return rotate(v, self.rotation)

    def vec_to_local(self, v: Coord) -> Coord:
        return rotate(v, -self.rotation)

    def compose(self, inner: "LocalFrame") -> "LocalFrame":
        """Frame whose local coordinates are ``inner``-local coordinates of this frame."""
        return LocalFrame(self.to_world(inner.origin), (self.rotation + inner.rotation) % 4)


@dataclass(frozen=True)
class Field:
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.h < 1 or self.w < 1:
            raise GridError(f"field dimensions must be positive, got {self.w}x{self.h}")
        if self.w <= self.h:
            raise GridError(f"field must be wider than tall (w > h), got {self.w}x{self.h}")

    @property
    def interior_size(self) -> int:
        return self.w * self.h

    def inside(self, c: Coord) -> bool:
        return 0 <= c[0] < self.w and 0 <= c[1] < self.h

    def is_wall(self, c: Coord) -> bool:
        x, y = c
        if not (-1 <= x <= self.w and -1 <= y <= self.h):
            return False
        return x in (-1, self.w) or y in (-1, self.h)

    def walls(self) -> Cells:
        """Union of the north, south, east and west wall strips."""
        north = {(x, self.h) for x in range(-1, self.w + 1)}
        south = {(x, -1) for x in range(-1, self.w + 1)}
        east = {(self.w, y) for y in range(-1, self.h + 1)}
        west = {(-1, y) for y in range(-1, self.h + 1)}
        return frozenset(north | south | east | west)

    def interior(self) -> Iterator[Coord]:
        for x in range(self.w):
            for y in range(self.h):
                yield (x, y)


def make_field(w: int, h: int) -> Field:
    return Field(w, h)


def side_adjacent(a: Coord, b: Coord) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def components(cells: Iterable[Coord]) -> list:
    """Side-adjacency connected components, each as a frozenset, in a stable order."""
    remaining = set(cells)
    out = []
    for start in sorted(remaining):
        if start not in remaining:
            continue
        remaining.discard(start)
        comp = {start}
        queue = deque([start])
        while queue:
            c = queue.popleft()
            for d in NEIGHBOURS:
                n = (c[0] + d[0], c[1] + d[1])
                if n in remaining:
                    remaining.discard(n)
                    comp.add(n)
                    queue.append(n)
        out.append(frozenset(comp))
    return out


def is_connected(cells: Iterable[Coord]) -> bool:
    cells = set(cells)
    if not cells:
        raise GridError("connectivity of an empty cell set is undefined")
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in NEIGHBOURS:
            n = (x + dx, y + dy)
            if n in cells and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(cells)


def smallest_enclosing_rectangle(cells: Iterable[Coord]) -> Tuple[Coord, Coord]:
    cells = list(cells)
    if not cells:
        raise GridError("bounding box of an empty cell set is undefined")
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    return (min(xs), min(ys)), (max(xs), max(ys))


def box_size(cells: Iterable[Coord]) -> Tuple[int, int]:
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    return x1 - x0 + 1, y1 - y0 + 1


def normalize(cells: Iterable[Coord]) -> Cells:
    """Translate so the bounding box starts at (0, 0)."""
    cells = list(cells)
    (x0, y0), _ = smallest_enclosing_rectangle(cells)
    return frozenset((x - x0, y - y0) for x, y in cells)


def rotate_cells(cells: Iterable[Coord], r: int) -> Cells:
    return frozenset(rotate(c, r) for c in cells)


@dataclass(frozen=True)
class WorldState:
    field: Field
    r1: Cells
    r2: Cells

    def __post_init__(self) -> None:
        for name, cells in (("r1", self.r1), ("r2", self.r2)):
            if not isinstance(cells, frozenset):
                object.__setattr__(self, name, frozenset(cells))
        for c in self.r1 | self.r2:
            if not self.field.inside(c):
                raise GridError(f"cell {c} lies outside the {self.field.w}x{self.field.h} field")
        if self.r1 & self.r2:
            raise GridError(f"the two systems overlap at {sorted(self.r1 & self.r2)}")

    @property
    def systems(self) -> Tuple[Cells, Cells]:
        return (self.r1, self.r2)

    @property
    def occupied(self) -> Cells:
        return self.r1 | self.r2

    def owner(self, c: Coord) -> Optional[int]:
        if c in self.r1:
            return 0
        if c in self.r2:
            return 1
        return None

    def cell(self, c: Coord) -> Cell:
        if not self.field.inside(c):
            return Cell.WALL
        if c in self.r1 or c in self.r2:
            return Cell.MODULE
        return Cell.EMPTY

    def check_connected(self) -> None:
        for name, cells in (("r1", self.r1), ("r2", self.r2)):
            if cells and not is_connected(cells):
                raise GridError(f"{name} is not connected: {sorted(cells)}")


class Observation:
    """What one module sees: a ``(2k+1)^2`` window in its own frame, observer at centre.

    The window is stored sparsely (module coordinates plus the interior
    rectangle clipped to the window), which is exactly as informative as the
    dense grid for a rectangular field.  Every read goes through :meth:`cell`
    or :meth:`modules_within` so the farthest distance a controller looks at
    can be measured.
    """

    __slots__ = ("k", "modules", "bounds", "_reach", "_hash")

    def __init__(self, k: int, modules: Cells, bounds: Tuple[int, int, int, int]):
        self.k = k
        self.modules = modules
        self.bounds = bounds
        self._reach = 0
        self._hash = hash((k, modules, bounds))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Observation):
            return NotImplemented
        return self.k == other.k and self.bounds == other.bounds and self.modules == other.modules

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Observation(k={self.k}, modules={sorted(self.modules)}, bounds={self.bounds})"

    @property
    def reach(self) -> int:
        """Largest Chebyshev distance read so far."""
        return self._reach

    def reset_reach(self) -> None:
        self._reach = 0

    def _touch(self, d: int) -> None:
        if d > self.k:
            raise GridError(f"read at distance {d} exceeds visibility range {self.k}")
        if d > self._reach:
            self._reach = d

    def cell(self, dx: int, dy: int) -> Cell:
        self._touch(max(abs(dx), abs(dy)))
        if (dx, dy) in self.modules:
            return Cell.MODULE
        x0, x1, y0, y1 = self.bounds
        if x0 <= dx <= x1 and y0 <= dy <= y1:
            return Cell.EMPTY
        return Cell.WALL

    def is_module(self, dx: int, dy: int) -> bool:
        self._touch(max(abs(dx), abs(dy)))
        return (dx, dy) in self.modules

    def modules_within(self, r: int) -> Cells:
        """All modules at Chebyshev distance <= r (counts as reading the whole square)."""
        self._touch(r)
        return frozenset(c for c in self.modules if max(abs(c[0]), abs(c[1])) <= r)

    def grid(self) -> Tuple[Tuple[Cell, ...], ...]:
        """Dense occupancy rows, top row first; rows index local y from +k down to -k."""
        k = self.k
        saved = self._reach
        rows = tuple(
            tuple(self.cell(dx, dy) for dx in range(-k, k + 1)) for dy in range(k, -k - 1, -1)
        )
        self._reach = saved
        return rows

    def clamp(self, k: int) -> "Observation":
        """The same view restricted to a smaller range."""
        if k > self.k:
            raise GridError("cannot widen an observation")
        mods = frozenset(c for c in self.modules if max(abs(c[0]), abs(c[1])) <= k)
        return Observation(k, mods, _clip_bounds(self.bounds, k))


def _clip_bounds(bounds: Tuple[int, int, int, int], k: int) -> Tuple[int, int, int, int]:
    lo, hi = -k - 1, k + 1
    return tuple(min(max(b, lo), hi) for b in bounds)  # type: ignore[return-value]


def observe(w: WorldState, pos: Coord, frame_rotation: int, k: int) -> Observation:
    """Observation of the module at ``pos`` whose local axes are turned by ``frame_rotation``."""
    if pos not in w.r1 and pos not in w.r2:
        raise GridError(f"no module at {pos}")
    box = (0, w.field.w - 1, 0, w.field.h - 1)
    return observe_cells(w.r1 | w.r2, box, pos, frame_rotation, k)


def observe_cells(
    occupied: Iterable[Coord],
    interior: Tuple[int, int, int, int],
    pos: Coord,
    frame_rotation: int,
    k: int,
) -> Observation:
    """Observation over an arbitrary axis-aligned interior ``(x0, x1, y0, y1)``.

    This is :func:`observe` without the :class:`Field` shape restriction, so a
    world turned by an odd number of quarter turns can still be looked at.
    """
    if k < 1:
        raise GridError("visibility range must be at least 1")
    px, py = pos
    mods = []
    for c in occupied:
        dx, dy = c[0] - px, c[1] - py
        if -k <= dx <= k and -k <= dy <= k:
            mods.append(rotate((dx, dy), -frame_rotation))
    ax, ay = rotate((interior[0] - px, interior[2] - py), -frame_rotation)
    bx, by = rotate((interior[1] - px, interior[3] - py), -frame_rotation)
    bounds = (min(ax, bx), max(ax, bx), min(ay, by), max(ay, by))
    return Observation(k, frozenset(mods), _clip_bounds(bounds, k))


def rotate_world(w: WorldState, r: int, pivot: Coord = (0, 0)) -> Tuple[Cells, Cells, Cells]:
    """Turn both systems and the wall ring about ``pivot``; returns (r1, r2, walls) as cell sets."""

    def turn(cells: Iterable[Coord]) -> Cells:
        return frozenset(add(pivot, rotate(sub(c, pivot), r)) for c in cells)

    return turn(w.r1), turn(w.r2), turn(w.field.walls())
