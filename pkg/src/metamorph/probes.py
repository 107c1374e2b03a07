"""Searches showing that the two visibility ranges cannot be lowered.

* :func:`rendezvous_ambiguity` takes the state in which two systems first
  fit the switch square and moves the far cells of one system just out of a
  module's range-6 view, so that they no longer fit.  The module sees the
  same thing in both worlds yet must merge in one and keep going in the other.
* :func:`merge_blind_spot` finds a merge run, starting with both systems
  spread over a full 8x8 square, in which a transformation leaves that
  square by one cell and some module then needs range 8 to see all ten
  modules, so range 7 would not do.

Both return plain records that the tests store as regression fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from . import engine as eng
from . import merge as mg
from . import rendezvous as rv
from .catalog import Catalog, load_catalog
from .field import Cells, Coord, Field, GridError, LocalFrame, WorldState, is_connected, observe, smallest_enclosing_rectangle
from .kinematics import Action


@dataclass(frozen=True)
class Ambiguity:
    """Two worlds a module cannot tell apart at range ``k`` that need different actions.

    In ``first`` the two systems fit the switch square, so the module must
    make its merge move; in ``second`` they do not, so it must keep to the
    rendezvous rule.  Only cells beyond range ``k`` of the module differ.
    """

    field: Tuple[int, int]
    first: Tuple[Cells, Cells]
    second: Tuple[Cells, Cells]
    module: Coord
    k: int
    action_first: Action  # in the module's own coordinates
    action_second: Action


def required_action(w: WorldState, pos: Coord, catalog: Catalog) -> Action:
    """The combined rule for one module: merge once both systems fit the switch square."""
    if rv.rendezvous_done(w):
        return mg.decide_merge(observe(w, pos, 0, mg.RANGE), catalog)
    return rv.decide(observe(w, pos, 0, rv.RANGE), catalog)


def _fits(cells: Iterable[Coord], size: int) -> bool:
    return max(_extent(cells)) <= size


def _variants(visible: Cells, hidden: Cells, own: Cells, pos: Coord, field: Field, k: int,
              cat: Catalog) -> Iterable[Cells]:
    """Other systems sharing ``visible`` whose remaining cells all lie beyond range ``k`` of ``pos``."""
    ring = sorted(
        c for c in field.interior()
        if k < max(abs(c[0] - pos[0]), abs(c[1] - pos[1])) <= k + 2 and c not in own
        and min(max(abs(c[0] - h[0]), abs(c[1] - h[1])) for h in hidden) <= 2
    )
    from itertools import combinations

    touching = {(x + dx, y + dy) for x, y in own for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))}
    for extra in combinations(ring, len(hidden)):
        cand = visible | frozenset(extra)
        if cand == visible | hidden or cand & touching or not is_connected(cand):
            continue
        try:
            shape = cat.shape_of(cand)
        except GridError:
            continue
        if not shape.symmetric:
            yield cand


def rendezvous_ambiguity(field: Field, k: int = rv.RANGE - 1, catalog: Optional[Catalog] = None,
                         samples: int = 200, seed: int = 0) -> Optional[Ambiguity]:
    """Search switch states of sampled runs for a range-``k`` ambiguity of the combined rule."""
    from .verify import rendezvous_budget, sampled_scenarios

    cat = catalog or load_catalog()
    for w0 in sampled_scenarios(samples, seed, ((field.w, field.h),), cat):
        res = eng.run_combined(w0, rendezvous_budget(field.w, field.h), fast=True, catalog=cat)
        if res.switch_tick is None:
            continue
        w1 = _state_at(res.trace, res.switch_tick)
        for own, other, swap in ((w1.r1, w1.r2, False), (w1.r2, w1.r1, True)):
            for pos in sorted(own):
                hidden = frozenset(c for c in other if max(abs(c[0] - pos[0]), abs(c[1] - pos[1])) > k)
                if not hidden:
                    continue
                act1 = required_action(w1, pos, cat)
                for alt in _variants(other - hidden, hidden, own, pos, field, k, cat):
                    if _fits(own | alt, rv.SWITCH_SIZE):
                        continue
                    w2 = WorldState(field, alt, own) if swap else WorldState(field, own, alt)
                    if observe(w1, pos, 0, k) != observe(w2, pos, 0, k):
                        continue
                    try:
                        act2 = required_action(w2, pos, cat)
                    except GridError:
                        continue
                    if act2 != act1:
                        return Ambiguity((field.w, field.h), (w1.r1, w1.r2), (w2.r1, w2.r2), pos, k, act1, act2)
    return None


def _state_at(trace: "eng.Trace", tick: int) -> WorldState:
    w = trace.initial_world()
    if tick == 0:
        return w
    rec = trace.records[tick - 1]
    return WorldState(w.field, frozenset(map(tuple, rec["r1"])), frozenset(map(tuple, rec["r2"])))


@dataclass(frozen=True)
class BlindSpot:
    a: Cells  # first system, in merge-field coordinates
    b: Cells
    tick: int  # state after this many ticks
    state: Tuple[Cells, Cells]
    module: Coord
    distance: int  # range this module needs to see all ten
    box: Tuple[int, int]  # extent of the joint box at that state


def _extent(cells: Iterable[Coord]) -> Tuple[int, int]:
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    return x1 - x0 + 1, y1 - y0 + 1


def merge_blind_spot(k: int = mg.RANGE - 2, catalog: Optional[Catalog] = None, box: int = 8) -> Optional[BlindSpot]:
    """First start spanning a full ``box`` square whose run leaves it by one cell and needs more than range ``k``."""
    from .verify import merge_pairs, merge_world

    cat = catalog or load_catalog()
    for a, b, _ in merge_pairs(box):
        if _extent(a | b) != (box, box):
            continue
        w0 = merge_world(a, b)
        res = eng.run(w0, eng.MERGE, mg.merged, 500, fast=True, catalog=cat)
        if res.outcome is not eng.Outcome.SOLVED:
            continue
        states = [(w0.r1, w0.r2)] + [
            (frozenset(map(tuple, r["r1"])), frozenset(map(tuple, r["r2"]))) for r in res.trace.records
        ]
        for t, (r1, r2) in enumerate(states):
            if mg.merged(WorldState(w0.field, r1, r2)):
                break
            ext = _extent(r1 | r2)
            if max(ext) != box + 1:
                continue
            for own, other in ((r1, r2), (r2, r1)):
                for p in sorted(own):
                    d = max(max(abs(p[0] - c[0]), abs(p[1] - c[1])) for c in r1 | r2)
                    if d > k:
                        return BlindSpot(w0.r1, w0.r2, t, (r1, r2), p, d, ext)
    return None


def sees_all(state: Tuple[Cells, Cells], field: Field, module: Coord, k: int) -> bool:
    """Does the module at ``module`` see all ten modules at range ``k``?"""
    w = WorldState(field, *state)
    o = observe(w, module, 0, k)
    try:
        mg.partition_observation(o)
    except GridError:
        return False
    return True


def ambiguity_to_json(a: Ambiguity) -> dict:
    return {
        "field": list(a.field),
        "first": [sorted(map(list, a.first[0])), sorted(map(list, a.first[1]))],
        "second": [sorted(map(list, a.second[0])), sorted(map(list, a.second[1]))],
        "module": list(a.module),
        "k": a.k,
        "action_first": a.action_first.to_json(),
        "action_second": a.action_second.to_json(),
    }


def blind_spot_to_json(s: BlindSpot) -> dict:
    return {
        "a": sorted(map(list, s.a)),
        "b": sorted(map(list, s.b)),
        "tick": s.tick,
        "state": [sorted(map(list, s.state[0])), sorted(map(list, s.state[1]))],
        "module": list(s.module),
        "distance": s.distance,
        "box": list(s.box),
    }
