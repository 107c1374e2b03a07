"""The 18 compass-free states of a five-module system.

Two cell sets share a state when one is a translation plus rotation of the
other (no reflection: modules share a sense of clockwise).  Every state has
a canonical orientation; a :class:`Placement` records how the canonical
cells are laid into the world.  Labels ``1..18`` and the anchor/traveler
roles come from the packaged catalog (see :mod:`metamorph.catalog`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .field import (
    NEIGHBOURS,
    Cells,
    Coord,
    GridError,
    LocalFrame,
    is_connected,
    normalize,
    rotate,
    rotate_cells,
    smallest_enclosing_rectangle,
)


def canonical_form(cells: Iterable[Coord]) -> Tuple[Coord, ...]:
    """Least normalized sorted cell tuple over the four rotations."""
    cells = frozenset(cells)
    return min(tuple(sorted(normalize(rotate_cells(cells, r)))) for r in range(4))


def free_form(cells: Iterable[Coord]) -> Tuple[Coord, ...]:
    """Canonical form under rotation and reflection."""
    cells = frozenset(cells)
    mirrored = frozenset((-x, y) for x, y in cells)
    return min(canonical_form(cells), canonical_form(mirrored))


def enumerate_polyominoes(n: int) -> List[Tuple[Coord, ...]]:
    """All fixed (translation-normalized) polyominoes of ``n`` cells, by growth."""
    if n < 1:
        raise GridError("polyomino size must be positive")
    level = {frozenset({(0, 0)})}
    for _ in range(n - 1):
        grown = set()
        for cells in level:
            for x, y in cells:
                for dx, dy in NEIGHBOURS:
                    c = (x + dx, y + dy)
                    if c not in cells:
                        grown.add(normalize(cells | {c}))
        level = grown
    return sorted(tuple(sorted(c)) for c in level)


def one_sided_classes(n: int) -> List[Tuple[Coord, ...]]:
    return sorted({canonical_form(c) for c in enumerate_polyominoes(n)})


def rotational_symmetries(cells: Iterable[Coord]) -> Tuple[int, ...]:
    """Quarter-turn counts in {1, 2, 3} that map the shape onto itself."""
    base = normalize(cells)
    return tuple(r for r in (1, 2, 3) if normalize(rotate_cells(base, r)) == base)


@dataclass(frozen=True)
class ShapeClass:
    label: int
    name: str
    cells: Tuple[Coord, ...]
    symmetries: Tuple[int, ...]
    roles: Tuple[str, ...] = ()

    @property
    def symmetric(self) -> bool:
        return bool(self.symmetries)

    @property
    def box(self) -> Tuple[int, int]:
        (x0, y0), (x1, y1) = smallest_enclosing_rectangle(self.cells)
        return x1 - x0 + 1, y1 - y0 + 1

    @property
    def frames(self) -> Tuple[LocalFrame, ...]:
        """Canonical anchors: one frame per rotation mapping the canonical cells to themselves.

        The identity frame has its origin at (0, 0); a symmetry frame turned by
        ``r`` has its origin where the bounding-box corner lands after the turn.
        """
        out = [LocalFrame((0, 0), 0)]
        cells = frozenset(self.cells)
        for r in self.symmetries:
            turned = rotate_cells(cells, r)
            (x0, y0), _ = smallest_enclosing_rectangle(turned)
            out.append(LocalFrame((-x0, -y0), r))
        return tuple(out)


@dataclass(frozen=True)
class Placement:
    """A shape laid into the world: world cell = frame.to_world(canonical cell)."""

    shape: ShapeClass
    frame: LocalFrame

    @property
    def cells(self) -> Cells:
        return frozenset(self.frame.to_world(c) for c in self.shape.cells)

    @property
    def label(self) -> int:
        return self.shape.label


def embed(shape: ShapeClass, frame: LocalFrame) -> Cells:
    return frozenset(frame.to_world(c) for c in shape.cells)


def placements_of(cells: Iterable[Coord], shapes: Dict[Tuple[Coord, ...], ShapeClass]) -> List[Placement]:
    """Every frame that lays the matching catalog shape exactly onto ``cells``."""
    cells = frozenset(cells)
    if len(cells) != 5:
        raise GridError(f"expected five cells, got {len(cells)}")
    if not is_connected(cells):
        raise GridError(f"cells are not connected: {sorted(cells)}")
    key = canonical_form(cells)
    shape = shapes.get(key)
    if shape is None:
        raise GridError(f"no catalog shape matches {sorted(cells)}")
    return _frames_onto(shape, cells)


def _frames_onto(shape: ShapeClass, cells: Cells) -> List[Placement]:
    canon = frozenset(shape.cells)
    (wx0, wy0), _ = smallest_enclosing_rectangle(cells)
    out = []
    for r in range(4):
        turned = rotate_cells(canon, r)
        (tx0, ty0), _ = smallest_enclosing_rectangle(turned)
        origin = (wx0 - tx0, wy0 - ty0)
        frame = LocalFrame(origin, r)
        if embed(shape, frame) == cells:
            out.append(Placement(shape, frame))
    return out


def view(frame: LocalFrame, modules: Iterable[Coord]) -> Tuple[Coord, ...]:
    """Module coordinates expressed in ``frame``, sorted by x then y."""
    return tuple(sorted(frame.to_local(c) for c in modules))


def min_view_placement(placements: Sequence[Placement], modules: Iterable[Coord]) -> Tuple[Placement, Tuple[Coord, ...]]:
    """The placement whose view of ``modules`` is lexicographically least (first on ties)."""
    modules = list(modules)
    best = None
    best_view = None
    for p in placements:
        v = view(p.frame, modules)
        if best_view is None or v < best_view:
            best, best_view = p, v
    if best is None:
        raise GridError("no placement to choose from")
    return best, best_view


def compare(a: Tuple[int, Tuple[Coord, ...]], b: Tuple[int, Tuple[Coord, ...]]) -> int:
    """-1 / 0 / +1 ordering by label first, then view."""
    if a[0] != b[0]:
        return -1 if a[0] < b[0] else 1
    if a[1] != b[1]:
        return -1 if a[1] < b[1] else 1
    return 0


LESS, TIE, GREATER = -1, 0, 1
