"""Rotations, slidings and the legality of simultaneous steps.

A rotation carries a module a quarter turn about a side-adjacent, non-moving
pivot of its own system; it sweeps the diagonal transit corner and the
destination.  An l-sliding moves a module l cells along one axis, guided by a
straight line of non-moving modules of its own system on one side of the
track (l + 1 guides).  A step is the set of actions of both systems at one
tick; it is legal when every action is legal on its own, every system stays
connected, every backbone (the non-movers) stays connected, and no two
trajectories share a cell.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .field import Coord, Cells, Field, GridError, WorldState, add, is_connected, rotate

CW = "CW"
CCW = "CCW"
UNIT_VECTORS: Tuple[Coord, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


class Kind(str, enum.Enum):
    ROTATE = "rotate"
    SLIDE = "slide"
    NOOP = "noop"


@dataclass(frozen=True)
class Action:
    """One module's movement; ``mover`` is the cell it starts from.

    Rotate uses ``pivot`` and ``sense``; Slide uses ``direction`` and ``length``.
    """

    kind: Kind
    mover: Coord
    pivot: Optional[Coord] = None
    sense: Optional[str] = None
    direction: Optional[Coord] = None
    length: int = 0

    def __post_init__(self) -> None:
        if self.kind is Kind.ROTATE:
            if self.pivot is None or self.sense not in (CW, CCW):
                raise GridError("rotation needs a pivot and a sense")
            if abs(self.pivot[0] - self.mover[0]) + abs(self.pivot[1] - self.mover[1]) != 1:
                raise GridError(f"pivot {self.pivot} is not side-adjacent to {self.mover}")
        elif self.kind is Kind.SLIDE:
            if self.direction not in UNIT_VECTORS:
                raise GridError(f"slide direction must be an axis unit vector, got {self.direction}")
            if self.length < 1:
                raise GridError("slide length must be at least 1")

    @property
    def moves(self) -> bool:
        return self.kind is not Kind.NOOP

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "mover": list(self.mover)}
        if self.kind is Kind.ROTATE:
            out["pivot"] = list(self.pivot)
            out["sense"] = self.sense
        elif self.kind is Kind.SLIDE:
            out["direction"] = list(self.direction)
            out["length"] = self.length
        return out

    @classmethod
    def from_json(cls, d: Mapping) -> "Action":
        kind = Kind(d["kind"])
        mover = tuple(d["mover"])
        if kind is Kind.ROTATE:
            return cls(kind, mover, pivot=tuple(d["pivot"]), sense=d["sense"])
        if kind is Kind.SLIDE:
            return cls(kind, mover, direction=tuple(d["direction"]), length=int(d["length"]))
        return cls(kind, mover)

    def transformed(self, to_world) -> "Action":
        """Re-express a frame-relative action; ``to_world`` maps points, vectors follow."""
        mover = to_world(self.mover)
        if self.kind is Kind.ROTATE:
            return Action(Kind.ROTATE, mover, pivot=to_world(self.pivot), sense=self.sense)
        if self.kind is Kind.SLIDE:
            tip = to_world(add(self.mover, self.direction))
            return Action(Kind.SLIDE, mover, direction=(tip[0] - mover[0], tip[1] - mover[1]), length=self.length)
        return Action(Kind.NOOP, mover)


def noop(mover: Coord) -> Action:
    return Action(Kind.NOOP, mover)


def rotation(mover: Coord, pivot: Coord, sense: str) -> Action:
    return Action(Kind.ROTATE, mover, pivot=pivot, sense=sense)


def slide(mover: Coord, direction: Coord, length: int = 1) -> Action:
    return Action(Kind.SLIDE, mover, direction=direction, length=length)


def rotation_destination(mover: Coord, pivot: Coord, sense: str) -> Tuple[Coord, Coord]:
    """(destination, transit corner) of a quarter turn of ``mover`` about ``pivot``."""
    v = (mover[0] - pivot[0], mover[1] - pivot[1])
    if abs(v[0]) + abs(v[1]) != 1:
        raise GridError(f"pivot {pivot} is not side-adjacent to {mover}")
    if sense == CW:
        t = rotate(v, -1)
    elif sense == CCW:
        t = rotate(v, 1)
    else:
        raise GridError(f"unknown sense {sense!r}")
    return add(pivot, t), add(mover, t)


def destination(a: Action) -> Coord:
    if a.kind is Kind.ROTATE:
        return rotation_destination(a.mover, a.pivot, a.sense)[0]
    if a.kind is Kind.SLIDE:
        return (a.mover[0] + a.direction[0] * a.length, a.mover[1] + a.direction[1] * a.length)
    return a.mover


def trajectory(a: Action) -> Tuple[Coord, ...]:
    """Cells swept by the mover, start excluded, destination last."""
    if a.kind is Kind.ROTATE:
        dest, transit = rotation_destination(a.mover, a.pivot, a.sense)
        return (transit, dest)
    if a.kind is Kind.SLIDE:
        dx, dy = a.direction
        return tuple((a.mover[0] + dx * i, a.mover[1] + dy * i) for i in range(1, a.length + 1))
    return ()


def guides(a: Action) -> Tuple[Tuple[Coord, ...], Tuple[Coord, ...]]:
    """The two candidate guide lines (left side, right side) of a slide."""
    dx, dy = a.direction
    left = (-dy, dx)
    right = (dy, -dx)
    track = [(a.mover[0] + dx * i, a.mover[1] + dy * i) for i in range(a.length + 1)]
    return (
        tuple(add(c, left) for c in track),
        tuple(add(c, right) for c in track),
    )


class StepError(GridError):
    """A rejected action or step; ``reason`` is one of the class constants."""

    BLOCKED = "Blocked"
    SUPPORT = "Support"
    CONNECTIVITY = "Connectivity"
    BACKBONE = "Backbone"
    OVERLAP = "Overlap"
    MALFORMED = "Malformed"

    def __init__(self, reason: str, detail: str):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail


def _support(a: Action, own_backbone: Cells) -> Optional[str]:
    if a.kind is Kind.ROTATE:
        if a.pivot not in own_backbone:
            return f"pivot {a.pivot} of {a.mover} is not a non-moving module of its own system"
    elif a.kind is Kind.SLIDE:
        if not any(all(g in own_backbone for g in line) for line in guides(a)):
            return f"slide of {a.mover} has no guide line"
    return None


def validate_action(w: WorldState, a: Action, backbone: Optional[Cells] = None) -> Tuple[Coord, ...]:
    """Swept cells of ``a`` if it is legal on its own, else :class:`StepError`.

    ``backbone`` defaults to the mover's whole system minus the mover itself,
    i.e. the action is judged as if nothing else moved.
    """
    own = w.r1 if a.mover in w.r1 else w.r2 if a.mover in w.r2 else None
    if own is None:
        raise StepError(StepError.MALFORMED, f"no module at {a.mover}")
    if backbone is None:
        backbone = own - {a.mover}
    else:
        backbone = backbone & own
    swept = trajectory(a)
    occupied = w.r1 | w.r2
    for c in swept:
        if not w.field.inside(c):
            raise StepError(StepError.BLOCKED, f"{a.mover} would enter wall cell {c}")
        if c in occupied:
            raise StepError(StepError.BLOCKED, f"{a.mover} would pass through occupied cell {c}")
    problem = _support(a, backbone)
    if problem:
        raise StepError(StepError.SUPPORT, problem)
    return swept


@dataclass(frozen=True)
class StepPlan:
    """A validated joint step: per system, mover -> destination."""

    moves: Tuple[Tuple[Tuple[Coord, Coord], ...], Tuple[Tuple[Coord, Coord], ...]]
    actions: Tuple[Tuple[Action, ...], Tuple[Action, ...]]

    @property
    def is_identity(self) -> bool:
        return not self.moves[0] and not self.moves[1]


def _as_actions(step: Optional[Iterable[Action] | Mapping[Coord, Action]]) -> List[Action]:
    if step is None:
        return []
    if isinstance(step, Mapping):
        return [a for a in step.values()]
    return list(step)


def validate_step(w: WorldState, s1=None, s2=None) -> StepPlan:
    """Check a joint step of both systems; raises :class:`StepError` on the first violation."""
    steps = (_as_actions(s1), _as_actions(s2))
    systems = (w.r1, w.r2)
    movers_all: Dict[Coord, Action] = {}
    for i, acts in enumerate(steps):
        for a in acts:
            if a.mover not in systems[i]:
                raise StepError(StepError.MALFORMED, f"system {i + 1} has no module at {a.mover}")
            if a.mover in movers_all:
                raise StepError(StepError.MALFORMED, f"module {a.mover} has two actions")
            movers_all[a.mover] = a

    claimed: Dict[Coord, Coord] = {}
    moves_out = []
    for i, acts in enumerate(steps):
        own = systems[i]
        moving = [a for a in acts if a.moves]
        movers = frozenset(a.mover for a in moving)
        backbone = own - movers
        for a in moving:
            swept = validate_action(w, a, backbone)
            for c in swept:
                if c in claimed:
                    raise StepError(
                        StepError.OVERLAP,
                        f"trajectories of {claimed[c]} and {a.mover} both use {c}",
                    )
                claimed[c] = a.mover
        if moving:
            if not backbone or not is_connected(backbone):
                raise StepError(StepError.BACKBONE, f"system {i + 1} backbone {sorted(backbone)} is disconnected")
            moved = tuple(sorted((a.mover, destination(a)) for a in moving))
            result = (own - movers) | {d for _, d in moved}
            if not is_connected(result):
                raise StepError(StepError.CONNECTIVITY, f"system {i + 1} would become disconnected")
            moves_out.append(moved)
        else:
            moves_out.append(())
    return StepPlan(
        moves=(moves_out[0], moves_out[1]),
        actions=(tuple(a for a in steps[0] if a.moves), tuple(a for a in steps[1] if a.moves)),
    )


def apply_step(w: WorldState, plan: StepPlan) -> WorldState:
    out = []
    for cells, moved in zip((w.r1, w.r2), plan.moves):
        if not moved:
            out.append(cells)
            continue
        gone = {m for m, _ in moved}
        out.append((cells - gone) | {d for _, d in moved})
    return WorldState(w.field, frozenset(out[0]), frozenset(out[1]))


def legal_single_actions(cells: Cells, obstacles: Cells = frozenset(), field: Optional[Field] = None) -> List[Action]:
    """Every rotation/slide (slides up to length 2) one module of ``cells`` could do alone."""
    out = []
    blocked = cells | obstacles

    def free(c: Coord) -> bool:
        return c not in blocked and (field is None or field.inside(c))

    for m in sorted(cells):
        for d in UNIT_VECTORS:
            p = add(m, d)
            if p in cells:
                for sense in (CW, CCW):
                    a = rotation(m, p, sense)
                    if all(free(c) for c in trajectory(a)):
                        out.append(a)
        for d in UNIT_VECTORS:
            for length in (1, 2):
                a = slide(m, d, length)
                if not all(free(c) for c in trajectory(a)):
                    break
                rest = cells - {m}
                if any(all(g in rest for g in line) for line in guides(a)):
                    out.append(a)
    return out


def transform_plan_cells(cells: Cells, actions: Sequence[Action]) -> Cells:
    """Result of applying actions to one system's cells, without validation."""
    movers = {a.mover for a in actions if a.moves}
    return frozenset((set(cells) - movers) | {destination(a) for a in actions if a.moves})
