"""Rendezvous controller: the per-module rule that walks a system along path A.

A module finds its own system (the connected component it belongs to),
classifies the shape, measures the free distance from the system's bounding
box to the wall in the four directions of the shape's canonical frame
(capped at the table's ``cap``) and looks the pair up in the rule table.
The rule gives a joint action set for the whole system in canonical
coordinates; the module performs its own share of it.

Nothing here depends on the foreign system: before the switch to merging
the two systems are never side-adjacent (two extent-four shapes that touch
already fit in an 8x8 square), so the own component is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .catalog import Catalog, RendezvousRule, load_catalog
from .field import (
    NEIGHBOURS,
    Cell,
    Cells,
    Coord,
    Field,
    GridError,
    LocalFrame,
    Observation,
    WorldState,
    chebyshev,
    smallest_enclosing_rectangle,
)
from .kinematics import Action, noop

MOVES = ("M_UR", "M_LL", "T_TW", "T_BW", "T_TC", "T_LW", "T_RW", "M_RW", "T_BC")
STRAIGHT = ("M_UR", "M_LL", "M_RW")
BOOTSTRAP = "BOOT"
REJECTED = "REJECTED"
RANGE = 7
SWITCH_SIZE = 8


class Unrecognized(GridError):
    """The observed system matches no rule: a bug or an illegal start."""


@dataclass(frozen=True)
class RecognizedState:
    """The ongoing move as one module sees it (all frames in observer coordinates)."""

    move: str
    phase: int
    label: int
    gaps: Tuple[int, int, int, int]
    placement: LocalFrame
    frame: Optional[LocalFrame]
    rule: Optional[RendezvousRule]

    @property
    def rejected(self) -> bool:
        return self.move == REJECTED


# ------------------------------------------------------------ geometry


def gaps_in(cells: Iterable[Coord], field: Field) -> Tuple[int, int, int, int]:
    """Uncapped free cells between the bounding box and the wall, world (E, N, W, S)."""
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    return (field.w - 1 - x1, field.h - 1 - y1, x0, y0)


def frame_gaps(world: Sequence[int], rotation: int, cap: int) -> Tuple[int, int, int, int]:
    """Gaps along a frame's (+x, +y, -x, -y), capped."""
    return tuple(min(cap, world[(i + rotation) % 4]) for i in range(4))  # type: ignore[return-value]


def canonical_frame(catalog: Catalog, cells: Cells) -> Tuple[int, Tuple[LocalFrame, ...]]:
    placements = catalog.placements(cells)
    return placements[0].label, tuple(p.frame for p in placements)


# ------------------------------------------------- per-module decision


def own_system(o: Observation) -> Cells:
    """The observer's connected component, found by flood fill from the centre."""
    seen = {(0, 0)}
    stack = [(0, 0)]
    while stack:
        x, y = stack.pop()
        for dx, dy in NEIGHBOURS:
            n = (x + dx, y + dy)
            if n not in seen and o.is_module(*n):
                seen.add(n)
                stack.append(n)
    return frozenset(seen)


def observed_gaps(o: Observation, cells: Cells, cap: int) -> Tuple[int, int, int, int]:
    """Free cells to the wall beyond the box, observer axes (E, N, W, S), capped.

    Each direction is probed along the observer's own row or column, which
    always crosses the box.  Modules of another system count as free.
    """
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    starts = ((x1, 0), (0, y1), (x0, 0), (0, y0))
    out = []
    for (sx, sy), (dx, dy) in zip(starts, NEIGHBOURS):
        g = cap
        for j in range(1, cap + 1):
            if o.cell(sx + dx * j, sy + dy * j) is Cell.WALL:
                g = j - 1
                break
        out.append(g)
    return tuple(out)  # type: ignore[return-value]


def recognize(o: Observation, catalog: Optional[Catalog] = None) -> RecognizedState:
    cat = catalog or load_catalog()
    rz = cat.rendezvous
    cells = own_system(o)
    if len(cells) != 5:
        raise Unrecognized(f"own system has {len(cells)} modules")
    label, frames = canonical_frame(cat, cells)
    if len(frames) != 1:
        return RecognizedState(REJECTED, 0, label, (0, 0, 0, 0), frames[0], None, None)
    f = frames[0]
    gaps = frame_gaps(observed_gaps(o, cells, rz.cap), f.rotation, rz.cap)
    rule = rz.rule(label, gaps)
    if rule is None:
        raise Unrecognized(f"no rule for shape {label} with gaps {gaps}")
    moving = f.compose(rule.frame) if rule.move in STRAIGHT else None
    return RecognizedState(rule.move, rule.phase, label, gaps, f, moving, rule)


def decide(o: Observation, catalog: Optional[Catalog] = None) -> Action:
    """The observer's own action, in observer coordinates (mover at the origin)."""
    st = recognize(o, catalog)
    if st.rejected:
        raise Unrecognized(f"shape {st.label} is symmetric and cannot rendezvous")
    for a in st.rule.actions:  # type: ignore[union-attr]
        world = a.transformed(st.placement.to_world)
        if world.mover == (0, 0):
            return world
    return noop((0, 0))


# ------------------------------------------------- whole-system shortcut


@dataclass(frozen=True)
class SystemDecision:
    """What every module of one system would decide, in world coordinates."""

    move: str
    phase: int
    actions: Tuple[Action, ...]
    reach: int


def module_reach(cells: Cells, pos: Coord, field: Field, cap: int) -> int:
    """Farthest cell :func:`decide` reads for the module at ``pos``.

    The flood fill reads the four neighbours of every own cell; each wall
    probe reads along the module's row or column up to the wall or ``cap``.
    """
    far = max(chebyshev(c, pos) for c in cells) + 1
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    world = gaps_in(cells, field)
    edges = (x1 - pos[0], y1 - pos[1], pos[0] - x0, pos[1] - y0)
    for e, g in zip(edges, world):
        far = max(far, e + min(g + 1, cap))
    return far


def system_decision(cells: Cells, field: Field, catalog: Optional[Catalog] = None) -> SystemDecision:
    """Same outcome as running :func:`decide` on each of the five modules."""
    cat = catalog or load_catalog()
    rz = cat.rendezvous
    label, frames = canonical_frame(cat, cells)
    if len(frames) != 1:
        raise Unrecognized(f"shape {label} is symmetric and cannot rendezvous")
    f = frames[0]
    gaps = frame_gaps(gaps_in(cells, field), f.rotation, rz.cap)
    rule = rz.rule(label, gaps)
    if rule is None:
        raise Unrecognized(f"no rule for shape {label} with gaps {gaps}")
    acts = tuple(sorted((a.transformed(f.to_world) for a in rule.actions), key=lambda a: a.mover))
    reach = max(module_reach(cells, p, field, rz.cap) for p in cells)
    return SystemDecision(rule.move, rule.phase, acts, reach)


def moving_frame(cells: Cells, field: Field, catalog: Optional[Catalog] = None) -> Tuple[str, int, Optional[LocalFrame]]:
    """(move, phase, world moving frame or None) of a system, for annotation and tests."""
    cat = catalog or load_catalog()
    label, frames = canonical_frame(cat, cells)
    if len(frames) != 1:
        return REJECTED, 0, None
    f = frames[0]
    rule = cat.rendezvous.rule(label, frame_gaps(gaps_in(cells, field), f.rotation, cat.rendezvous.cap))
    if rule is None:
        raise Unrecognized(f"no rule for shape {label}")
    return rule.move, rule.phase, f.compose(rule.frame) if rule.move in STRAIGHT else None


# ------------------------------------------------------------- path A


@dataclass(frozen=True)
class PathA:
    """Test-oracle geometry of path A; modules never read this.

    The path leaves the southwest corner heading northeast and bounces
    between the long walls, each traversal shifted one column east, until
    it ends in the northeast corner.  Its area is the parallelogram of cells
    with ``0 <= x - y <= w - h``; the acute corners are the southwest and
    northeast corners.
    """

    field: Field

    @property
    def start(self) -> Coord:
        return (0, 0)

    @property
    def end(self) -> Coord:
        return (self.field.w - 1, self.field.h - 1)

    @property
    def acute_corners(self) -> Tuple[Coord, Coord]:
        return (self.start, self.end)

    def in_area(self, c: Coord) -> bool:
        return 0 <= c[0] - c[1] <= self.field.w - self.field.h

    def traversals(self) -> List[Tuple[Coord, Coord]]:
        """Segments of the idealised zigzag: up-right, then down-left one column east, ..."""
        w, h = self.field.w, self.field.h
        out = []
        x = 0
        while x + h - 1 <= w - 1:
            out.append(((x, 0), (x + h - 1, h - 1)))
            x += 1
        return out

    def mirrored(self) -> Tuple[Coord, Coord]:
        """Acute corners of path B, the mirror image."""
        return ((self.field.w - 1, 0), (0, self.field.h - 1))


def path_A(field: Field) -> PathA:
    return PathA(field)


def at_acute_corner(cells: Cells, field: Field, catalog: Optional[Catalog] = None, slack: int = 3) -> bool:
    """Phase 0 of M_UR heading into path A from one of its acute corners.

    From the southwest corner the moving frame must be the world frame; from
    the northeast corner it is turned half way.  ``slack`` bounds the gap to
    the two walls of the corner.
    """
    move, phase, m = moving_frame(cells, field, catalog)
    if move != "M_UR" or phase != 0 or m is None:
        return False
    e, n, w, s = gaps_in(cells, field)
    if m.rotation == 0:
        return w <= slack and s <= slack
    if m.rotation == 2:
        return e <= slack and n <= slack
    return False


def rendezvous_done(w: WorldState, size: int = SWITCH_SIZE) -> bool:
    """Both systems fit in one ``size`` x ``size`` square."""
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(w.r1 | w.r2)
    return x1 - x0 < size and y1 - y0 < size
