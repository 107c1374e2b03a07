"""The ten recovery situations of a lone system, found by search on a given field.

Each case names the straight move a system is in, whether its heading runs
along path A (correct angle) or across it (wrong angle), which kind of wall
it meets first, and the turn it must take there.  :func:`find_case` scans
every phase-0 placement of that move, follows the system alone until its
first turn, and keeps the matching placement that meets its wall farthest
from the other walls.  The recovery claim is then that the system
reaches phase 0 of ``M_UR`` at an acute corner of path A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from . import engine as eng
from . import rendezvous as rv
from .catalog import Catalog, load_catalog
from .field import Cells, Field, GridError, LocalFrame, WorldState
from .kinematics import StepError, apply_step, validate_step


@dataclass(frozen=True)
class CaseSpec:
    name: str
    move: str  # "M_UR" or "M_LL"
    correct: bool  # heading along path A rather than across it
    wall: str  # "long", "side" or "corner": what the system meets first
    turn: str  # the turn it must take there
    outside: bool  # the meeting point lies outside the area of path A


CASES: Dict[str, CaseSpec] = {
    "C1": CaseSpec("C1", "M_UR", True, "long", "T_TW", True),
    "C2": CaseSpec("C2", "M_LL", True, "long", "T_BW", True),
    "C3": CaseSpec("C3", "M_UR", True, "side", "T_RW", True),
    "C4": CaseSpec("C4", "M_LL", True, "side", "T_LW", True),
    "W1": CaseSpec("W1", "M_UR", False, "long", "T_RW", False),
    "W2": CaseSpec("W2", "M_LL", False, "long", "T_LW", False),
    "W3": CaseSpec("W3", "M_UR", False, "side", "T_TW", False),
    "W4": CaseSpec("W4", "M_LL", False, "side", "T_BW", False),
    "W5": CaseSpec("W5", "M_UR", False, "corner", "T_TC", False),
    "W6": CaseSpec("W6", "M_LL", False, "corner", "T_BW", False),
}


@dataclass(frozen=True)
class Approach:
    """What happened before the first turn of a lone system."""

    start: Cells
    rotation: int
    ticks: int  # straight ticks before the turn
    clearance: int  # free cells to the nearest wall the case does not aim at, at the turn
    turn: str
    wall: str
    outside: bool


def recovery_budget(field: Field) -> int:
    return 20 * (field.w + field.h)


def _wall_kind(cells: Cells, field: Field, near: int) -> str:
    e, n, w, s = rv.gaps_in(cells, field)
    long_ = min(n, s) <= near
    side = min(e, w) <= near
    if long_ and side:
        return "corner"
    if long_:
        return "long"
    return "side" if side else "none"


def _outside(cells: Cells, field: Field) -> bool:
    path = rv.path_A(field)
    return not any(path.in_area(c) for c in cells)


def follow(start: Cells, field: Field, cat: Catalog, limit: int = 400) -> Optional[Tuple[int, str, Cells]]:
    """Straight ticks until the first turn, the turn, and the cells where it starts."""
    w = WorldState(field, start, frozenset())
    for t in range(limit):
        d = rv.system_decision(w.r1, field, cat)
        if d.move not in rv.STRAIGHT:
            return t, d.move, w.r1
        try:
            w = apply_step(w, validate_step(w, d.actions, ()))
        except StepError:
            return None
    return None


def approaches(spec: CaseSpec, field: Field, cat: Optional[Catalog] = None) -> List[Approach]:
    """Every phase-0 start of the case's move whose first turn matches ``spec``."""
    cat = cat or load_catalog()
    phase = cat.rendezvous.gaits[spec.move].phases[0]
    # frame rotation 0 or 2 keeps a straight move on the diagonal of path A
    rotations = (0, 2) if spec.correct else (1, 3)
    near = cat.rendezvous.wall_gap + 1
    out = []
    for r in rotations:
        for x in range(-4, field.w + 4):
            for y in range(-4, field.h + 4):
                cells = frozenset(LocalFrame((x, y), r).to_world(c) for c in phase.cells)
                if not all(field.inside(c) for c in cells):
                    continue
                try:
                    move, ph, m = rv.moving_frame(cells, field, cat)
                except GridError:
                    continue
                if (move, ph) != (spec.move, 0) or m is None or m.rotation != r:
                    continue
                if rv.at_acute_corner(cells, field, cat):
                    continue
                got = follow(cells, field, cat)
                if got is None:
                    continue
                ticks, turn, at = got
                kind = _wall_kind(at, field, near)
                e, n, w, s = rv.gaps_in(at, field)
                other = {"long": min(e, w), "side": min(n, s)}.get(spec.wall, 0)
                a = Approach(cells, r, ticks, other, turn, kind, _outside(at, field))
                if a.turn == spec.turn and a.wall == spec.wall and (a.outside or not spec.outside):
                    out.append(a)
    return out


def find_case(name: str, field: Field, cat: Optional[Catalog] = None) -> Approach:
    """The matching start that meets its wall farthest from the other walls.

    Ties go to the longer straight approach, then to the least cell list.
    """
    spec = CASES[name]
    found = approaches(spec, field, cat)
    if not found:
        raise GridError(f"no start on {field.w}x{field.h} realises case {name}")
    return max(found, key=lambda a: (a.clearance, a.ticks, [(-x, -y) for x, y in sorted(a.start)]))


def at_acute_corner_world(cat: Catalog):
    def pred(w: WorldState) -> bool:
        return rv.at_acute_corner(w.r1, w.field, cat)

    return pred


def run_case(start: Cells, field: Field, cat: Optional[Catalog] = None, fast: bool = False) -> eng.RunResult:
    """Run a lone system until it sits at an acute corner of path A in M_UR phase 0."""
    cat = cat or load_catalog()
    w0 = WorldState(field, start, frozenset())
    return eng.run(w0, eng.RENDEZVOUS, at_acute_corner_world(cat), recovery_budget(field),
                   fast=fast, catalog=cat, handover=True)


def turns_taken(result: eng.RunResult, cat: Optional[Catalog] = None) -> List[str]:
    """The turns a recorded run went through, in order, each listed once per visit."""
    cat = cat or load_catalog()
    field = result.trace.initial_world().field
    states = [result.trace.initial_world().r1] + [frozenset(map(tuple, r["r1"])) for r in result.trace.records]
    out: List[str] = []
    prev = None
    for cells in states:
        move = rv.moving_frame(cells, field, cat)[0]
        if move != prev and move not in rv.STRAIGHT:
            out.append(move)
        prev = move
    return out
