"""Merge controller: two systems inside an 8x8 square become one.

Every module sees all ten modules, splits them into its own and the other
system, and compares (label, view).  The larger system climbs the label
order to the anchor shape and stops; the smaller one waits for the anchor,
descends to a traveler shape and walks toward the anchor along its moving
x-axis, turning a quarter when the two boxes overlap on that axis.  When
the two are exact mirror images of each other (a tie) both descend and walk
at once, and a small table of joint patterns found by search overrides the
walk where the two would otherwise collide.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .catalog import Catalog, View, compare, load_catalog
from .field import (
    Cell,
    Cells,
    Coord,
    GridError,
    LocalFrame,
    Observation,
    WorldState,
    chebyshev,
    components,
    is_connected,
    rotate,
    smallest_enclosing_rectangle,
)
from .kinematics import Action, noop, trajectory
from .shapes import GREATER, LESS, TIE, view

RANGE = 9
MODULES = 10
# walls within this many cells of the joint box take part in breaking ties
WALL_MARGIN = 1

Pattern = Tuple[Tuple[Coord, ...], Tuple[Coord, ...]]
# True for a cell the system may not sweep (a wall cell)
Blocked = Callable[[Coord], bool]


class Relation(str, enum.Enum):
    DIFFERENT_LABELS = "DifferentLabels"
    SAME_LABEL = "SameLabelDifferentViews"
    SYMMETRIC = "Symmetric"


@dataclass(frozen=True)
class MergeRoles:
    """``larger``/``smaller`` are 0 for the observer's system, 1 for the other."""

    relation: Relation
    larger: Optional[int]
    smaller: Optional[int]


class MergeError(GridError):
    """The observation does not fit the merge precondition or any rule."""


# ----------------------------------------------------------- geometry


def x_overlapping(a: Cells, b: Cells, frame: LocalFrame) -> bool:
    """Do the boxes of ``a`` and ``b`` share a column of ``frame``'s x-axis (closed intervals)?"""
    pa = _project(a, frame)
    pb = _project(b, frame)
    return pa[0] <= pb[1] and pb[0] <= pa[1]


def _project(cells: Cells, frame: LocalFrame) -> Tuple[int, int]:
    xs = [frame.to_local(c)[0] for c in cells]
    return min(xs), max(xs)


def merged(w: WorldState) -> bool:
    return is_connected(w.r1 | w.r2)


def _norm_pair(a: Cells, b: Cells) -> Tuple[Pattern, Coord]:
    u = a | b
    x0 = min(x for x, _ in u)
    y0 = min(y for _, y in u)
    return (
        tuple(sorted((x - x0, y - y0) for x, y in a)),
        tuple(sorted((x - x0, y - y0) for x, y in b)),
    ), (x0, y0)


def canonical_pattern(a: Cells, b: Cells) -> Tuple[Pattern, int, bool, Coord]:
    """Least joint pattern over rotations and order, with the turn, swap and offset used."""
    best = None
    for r in range(4):
        ar = frozenset(rotate(c, r) for c in a)
        br = frozenset(rotate(c, r) for c in b)
        for swapped, (x, y) in ((False, (ar, br)), (True, (br, ar))):
            key, off = _norm_pair(x, y)
            if best is None or key < best[0]:
                best = (key, r, swapped, off)
    assert best is not None
    return best


# ---------------------------------------------------- system decision


@dataclass(frozen=True)
class MergeDecision:
    tag: str
    actions: Tuple[Action, ...]


class MergePolicy:
    """The merge rule over the tables of a catalog, evaluated for one system."""

    def __init__(self, catalog: Optional[Catalog] = None):
        self.catalog = catalog or load_catalog()
        anchors = self.catalog.with_role("anchor")
        if len(anchors) != 1:
            raise MergeError("catalog must mark exactly one anchor shape")
        self.anchor = anchors[0].label
        self.travelers = frozenset(s.label for s in self.catalog.with_role("traveler"))
        self.tables = self.catalog.merge

    def label_view(self, cells: Cells, everything: Cells) -> Tuple[int, View, LocalFrame]:
        best = None
        for p in self.catalog.placements(cells):
            v = view(p.frame, everything)
            if best is None or v < best[1]:
                best = (p.label, v, p.frame)
        assert best is not None
        return best

    def roles(self, own: Cells, other: Cells) -> MergeRoles:
        everything = own | other
        a = self.label_view(own, everything)
        b = self.label_view(other, everything)
        c = compare(a[:2], b[:2])
        if a[0] != b[0]:
            rel = Relation.DIFFERENT_LABELS
        elif c != 0:
            rel = Relation.SAME_LABEL
        else:
            return MergeRoles(Relation.SYMMETRIC, None, None)
        return MergeRoles(rel, 0, 1) if c == GREATER else MergeRoles(rel, 1, 0)

    def exception(self, own: Cells, other: Cells, blocked: Optional[Blocked] = None) -> Optional[Tuple[Action, ...]]:
        """Override for this joint pattern, or None.

        An override whose moves (of either system) would enter a wall is not
        used, so both systems fall back to the regular rule together.
        """
        if not self.tables.exceptions:
            return None
        key, r, swapped, (tx, ty) = canonical_pattern(own, other)
        entry = self.tables.exceptions.get(key)
        if entry is None:
            return None

        def back(p: Coord) -> Coord:
            return rotate((p[0] + tx, p[1] + ty), -r)

        mine, theirs = (entry[1], entry[0]) if swapped else entry
        placed = tuple(sorted((a.transformed(back) for a in mine), key=lambda a: a.mover))
        if blocked is not None:
            if not _clear(placed, blocked) or not _clear([a.transformed(back) for a in theirs], blocked):
                return None
        return placed

    def decide(self, own: Cells, other: Cells, blocked: Optional[Blocked] = None) -> MergeDecision:
        """What ``own`` does next.

        ``blocked`` marks wall cells; a shape change whose trajectory would
        enter one is replaced by the first fallback of the same direction
        that stays clear.  Without it the field is taken to be open.
        """
        if is_connected(own | other):
            return MergeDecision("merged", ())
        if blocked is not None:
            blocked = common_walls(blocked, own | other)
        exc = self.exception(own, other, blocked)
        if exc is not None:
            return MergeDecision("exception", exc)
        everything = own | other
        l_own, v_own, f_own = self.label_view(own, everything)
        l_oth, v_oth, f_oth = self.label_view(other, everything)
        c = compare((l_own, v_own), (l_oth, v_oth))
        if c == TIE and blocked is not None:
            c = self.wall_order(own, other, blocked)
        if c == GREATER:
            if l_own == self.anchor:
                return MergeDecision("anchor", ())
            return self._transform("increase", l_own, f_own, blocked)
        if c == LESS and l_oth != self.anchor:
            return MergeDecision("wait", ())
        if l_own not in self.travelers:
            if c == TIE and blocked is not None:
                return self._tied_decrease(own, other, l_own, f_own, f_oth, blocked)
            return self._transform("decrease", l_own, f_own, blocked)
        return self.horizontal(own, other, l_own, f_own)

    def _transform(self, kind: str, label: int, frame: LocalFrame, blocked: Optional[Blocked]) -> MergeDecision:
        default = getattr(self.tables, kind)[label]
        acts = _place(default, frame)
        if blocked is None or _clear(acts, blocked):
            return MergeDecision(kind, acts)
        for alt in getattr(self.tables, f"{kind}_fallbacks").get(label, ()):
            acts = _place(alt, frame)
            if _clear(acts, blocked):
                return MergeDecision(kind + "*", acts)
        raise MergeError(f"no wall-free {kind} step for label {label}")

    def wall_signature(self, cells: Cells, everything: Cells, blocked: Blocked) -> Tuple[Coord, ...]:
        """Wall cells near the joint box, in the least frame of ``cells`` that realises its view."""
        (x0, y0), (x1, y1) = smallest_enclosing_rectangle(everything)
        m = WALL_MARGIN
        walls = [(x, y) for x in range(x0 - m, x1 + m + 1) for y in range(y0 - m, y1 + m + 1) if blocked((x, y))]
        best_view = None
        best: Tuple[Coord, ...] = ()
        for p in self.catalog.placements(cells):
            v = view(p.frame, everything)
            sig = tuple(sorted(p.frame.to_local(c) for c in walls))
            if best_view is None or v < best_view or (v == best_view and sig < best):
                best_view, best = v, sig
        return best

    def wall_order(self, own: Cells, other: Cells, blocked: Blocked) -> int:
        """Break a tie between mirror images by how each sees the nearby walls."""
        everything = own | other
        a = self.wall_signature(own, everything, blocked)
        b = self.wall_signature(other, everything, blocked)
        return TIE if a == b else GREATER if a > b else LESS

    def _tied_decrease(self, own: Cells, other: Cells, label: int, f_own: LocalFrame, f_oth: LocalFrame,
                       blocked: Blocked) -> MergeDecision:
        """Both mirror-image systems shrink: take the first candidate both can make side by side.

        The test is symmetric in the two systems, so each of them settles on
        the same candidate even when only one is next to a wall.
        """
        candidates = (self.tables.decrease[label],) + self.tables.decrease_fallbacks.get(label, ())
        for n, cand in enumerate(candidates):
            mine = _place(cand, f_own)
            theirs = _place(cand, f_oth)
            if _clear(mine, blocked) and _clear(theirs, blocked) and _apart(own, mine, other, theirs):
                return MergeDecision("decrease" if n == 0 else "decrease*", mine)
        raise MergeError(f"no joint wall-free decrease for label {label}")

    def horizontal(self, own: Cells, other: Cells, label: int, placement: LocalFrame) -> MergeDecision:
        """Traveler walk: head toward the other system, turn once the boxes overlap on x."""
        spec = self.tables.travelers[label]
        m = placement.compose(spec.frame)
        po = _project(own, m)
        pt = _project(other, m)
        if po[0] <= pt[1] and pt[0] <= po[1]:
            side = LocalFrame(m.origin, (m.rotation + 1) % 4)
            if x_overlapping(own, other, side):
                # boxes overlap on both axes: close in along x toward the other's centre
                lean = (pt[0] + pt[1]) - (po[0] + po[1])
                if lean:
                    acts = spec.plus if lean > 0 else spec.minus
                    return MergeDecision("close+" if lean > 0 else "close-", _place(acts, m))
            return MergeDecision("turn", _place(spec.turn, m))
        if pt[0] > po[1]:
            return MergeDecision("x+", _place(spec.plus, m))
        return MergeDecision("x-", _place(spec.minus, m))


def _place(actions: Sequence[Action], frame: LocalFrame) -> Tuple[Action, ...]:
    return tuple(sorted((a.transformed(frame.to_world) for a in actions), key=lambda a: a.mover))


def common_walls(blocked: Blocked, everything: Cells) -> Blocked:
    """``blocked`` restricted to cells every one of the ten modules can see.

    Every module reads the same cells, so all of them (and the system-level
    evaluation) reach the same decision.
    """

    def seen(c: Coord) -> bool:
        return all(chebyshev(c, m) <= RANGE for m in everything) and blocked(c)

    return seen


def _apart(a: Cells, a_acts: Sequence[Action], b: Cells, b_acts: Sequence[Action]) -> bool:
    """Can the two steps run in the same tick without either sweeping through the other system?"""
    sa = {c for x in a_acts for c in trajectory(x)}
    sb = {c for x in b_acts for c in trajectory(x)}
    return not (sa & sb or sa & b or sb & a)


def _clear(actions: Sequence[Action], blocked: Blocked) -> bool:
    return not any(blocked(c) for a in actions for c in trajectory(a))


_POLICIES: Dict[int, MergePolicy] = {}


def policy(catalog: Optional[Catalog] = None) -> MergePolicy:
    cat = catalog or load_catalog()
    p = _POLICIES.get(id(cat))
    if p is None or p.catalog is not cat:
        p = _POLICIES[id(cat)] = MergePolicy(cat)
    return p


# -------------------------------------------------- per-module decision


def scan_modules(o: Observation, count: int = MODULES) -> Cells:
    """Read rings of growing radius until ``count`` modules have been seen."""
    found = set()
    for r in range(0, o.k + 1):
        ring = [c for c in o.modules if max(abs(c[0]), abs(c[1])) == r]
        o._touch(r)
        found.update(ring)
        if len(found) >= count:
            return frozenset(found)
    raise MergeError(f"only {len(found)} of {count} modules within range {o.k}")


def partition_observation(o: Observation, count: int = MODULES) -> Tuple[Cells, Cells]:
    mods = scan_modules(o, count)
    comps = components(mods)
    if len(comps) == 1:
        return comps[0], frozenset()
    if len(comps) != 2:
        raise MergeError(f"expected two systems, found {len(comps)} components")
    own = next(c for c in comps if (0, 0) in c)
    other = next(c for c in comps if (0, 0) not in c)
    return own, other


def assign_roles(o: Observation, catalog: Optional[Catalog] = None) -> MergeRoles:
    own, other = partition_observation(o)
    if not other:
        raise MergeError("systems are already merged")
    return policy(catalog).roles(own, other)


def decide_merge(o: Observation, catalog: Optional[Catalog] = None) -> Action:
    own, other = partition_observation(o)
    if not other:
        return noop((0, 0))
    def wall(c: Coord) -> bool:
        return o.cell(*c) is Cell.WALL

    for a in policy(catalog).decide(own, other, wall).actions:
        if a.mover == (0, 0):
            return a
    return noop((0, 0))


def system_reach(own: Cells, other: Cells) -> int:
    """Largest distance at which any module of ``own`` must look to see all ten."""
    everything = own | other
    return max(max(chebyshev(p, c) for c in everything) for p in own)
