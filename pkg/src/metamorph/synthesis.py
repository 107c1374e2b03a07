"""Offline search that produces the packaged rule tables.

Nothing here runs while simulating: :mod:`metamorph.catalog` loads the frozen
JSON that :func:`build_catalog` wrote.  The search is deterministic (every
iteration is over sorted data), so rebuilding yields identical bytes.

Rendezvous rules are keyed by ``(shape, gaps)``: the shape class of the
system and the distance from its bounding box to the wall in each of the
four canonical directions, capped at :data:`CAP` (``CAP`` means "CAP or
more").  A key maps to one joint action set written in the shape's
canonical frame, so every module of the system derives the same step.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .field import Cells, Coord, Field, LocalFrame, add, is_connected, normalize, rotate, smallest_enclosing_rectangle, sub
from .kinematics import (
    Action,
    Kind,
    destination,
    guides,
    legal_single_actions,
    trajectory,
)
from .shapes import canonical_form, one_sided_classes, rotational_symmetries

CAP = 4
CLASSES: Tuple[Tuple[Coord, ...], ...] = tuple(one_sided_classes(5))
INDEX: Dict[Tuple[Coord, ...], int] = {c: i for i, c in enumerate(CLASSES)}
SYMMETRIC = frozenset(i for i, c in enumerate(CLASSES) if rotational_symmetries(c))

Key = Tuple[int, Tuple[int, int, int, int]]


# ---------------------------------------------------------------- geometry


def translate(cells: Iterable[Coord], d: Coord) -> Cells:
    return frozenset((x + d[0], y + d[1]) for x, y in cells)


@lru_cache(maxsize=None)
def _norm_frames(norm: Cells) -> Tuple[int, Tuple[LocalFrame, ...]]:
    """Shape index and all canonical frames of a translation-normalized placement."""
    canon = canonical_form(norm)
    idx = INDEX[canon]
    out = []
    base = frozenset(canon)
    for r in range(4):
        turned = frozenset(rotate(c, r) for c in base)
        (tx, ty), _ = smallest_enclosing_rectangle(turned)
        frame = LocalFrame((-tx, -ty), r)
        if frozenset(frame.to_world(c) for c in base) == norm:
            out.append(frame)
    return idx, tuple(out)


def frames(cells: Cells) -> Tuple[int, Tuple[LocalFrame, ...]]:
    (x0, y0), _ = smallest_enclosing_rectangle(cells)
    idx, fs = _norm_frames(translate(cells, (-x0, -y0)))
    return idx, tuple(LocalFrame((f.origin[0] + x0, f.origin[1] + y0), f.rotation) for f in fs)


def canon(cells: Cells) -> Tuple[int, LocalFrame]:
    """Shape index and canonical frame of a placement of a non-symmetric shape."""
    idx, fs = frames(cells)
    if len(fs) != 1:
        raise ValueError(f"shape {idx} is symmetric; no unique frame")
    return idx, fs[0]


def world_gaps(cells: Cells, w: int, h: int) -> Tuple[int, int, int, int]:
    """Uncapped free cells between the bounding box and the wall: (E, N, W, S)."""
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    return (w - 1 - x1, h - 1 - y1, x0, y0)


def frame_gaps(wg: Sequence[int], rotation: int, cap: int = CAP) -> Tuple[int, int, int, int]:
    """Gaps along a frame's (+x, +y, -x, -y), capped."""
    return tuple(min(cap, wg[(i + rotation) % 4]) for i in range(4))  # type: ignore[return-value]


def key_of(cells: Cells, w: int, h: int) -> Tuple[Key, LocalFrame]:
    idx, frame = canon(cells)
    return (idx, frame_gaps(world_gaps(cells, w, h), frame.rotation)), frame


def map_action(a: Action, frame: LocalFrame) -> Action:
    return a.transformed(frame.to_world)


def unmap_action(a: Action, frame: LocalFrame) -> Action:
    return a.transformed(frame.to_local)


# ------------------------------------------------------------- free steps


@dataclass(frozen=True)
class FreeStep:
    actions: Tuple[Action, ...]
    result: Cells
    swept: Cells


def _free_steps_uncached(cells: Cells, max_movers: int) -> List[FreeStep]:
    singles = legal_single_actions(cells)
    by_mover: Dict[Coord, List[Action]] = {}
    for a in singles:
        by_mover.setdefault(a.mover, []).append(a)
    movers = sorted(by_mover)
    out = []
    for k in range(1, min(max_movers, len(movers)) + 1):
        for ms in itertools.combinations(movers, k):
            backbone = cells - set(ms)
            if not backbone or not is_connected(backbone):
                continue
            for acts in itertools.product(*[by_mover[m] for m in ms]):
                claimed: set = set()
                ok = True
                for a in acts:
                    if a.kind is Kind.ROTATE and a.pivot not in backbone:
                        ok = False
                    elif a.kind is Kind.SLIDE and not any(all(g in backbone for g in line) for line in guides(a)):
                        ok = False
                    if not ok:
                        break
                    for c in trajectory(a):
                        if c in claimed:
                            ok = False
                            break
                        claimed.add(c)
                    if not ok:
                        break
                if not ok:
                    continue
                res = frozenset(backbone | {destination(a) for a in acts})
                if is_connected(res):
                    out.append(FreeStep(tuple(acts), res, frozenset(claimed)))
    return out


@lru_cache(maxsize=None)
def _free_steps_norm(norm: Cells, max_movers: int) -> Tuple[FreeStep, ...]:
    return tuple(_free_steps_uncached(norm, max_movers))


def free_steps(cells: Cells, max_movers: int = 3) -> List[FreeStep]:
    """Every legal one-tick step of an isolated system in open space."""
    (x0, y0), _ = smallest_enclosing_rectangle(cells)
    d = (x0, y0)
    out = []
    for s in _free_steps_norm(translate(cells, (-x0, -y0)), max_movers):
        acts = tuple(a.transformed(lambda p: add(p, d)) for a in s.actions)
        out.append(FreeStep(acts, translate(s.result, d), translate(s.swept, d)))
    return out


def inside(cells: Iterable[Coord], w: int, h: int) -> bool:
    return all(0 <= x < w and 0 <= y < h for x, y in cells)


def apply_actions(cells: Cells, actions: Sequence[Action]) -> Cells:
    movers = {a.mover for a in actions}
    return frozenset((cells - movers) | {destination(a) for a in actions})


def swept_cells(actions: Sequence[Action]) -> Cells:
    return frozenset(c for a in actions for c in trajectory(a))


# ------------------------------------------------------------ rule tables


@dataclass(frozen=True)
class Rule:
    """What a system in one keyed situation does next.

    ``actions`` and ``frame`` are written in the shape's canonical frame;
    ``frame`` is the moving frame of the ongoing move (its origin is the
    move's landmark).
    """

    move: str
    phase: int
    actions: Tuple[Action, ...]
    frame: LocalFrame


def inverse_frame(f: LocalFrame) -> LocalFrame:
    return LocalFrame(rotate((-f.origin[0], -f.origin[1]), -f.rotation), (-f.rotation) % 4)


def _extent(cells: Iterable[Coord], i: int) -> int:
    """Furthest coordinate of ``cells`` along direction i of (+x, +y, -x, -y)."""
    if i == 0:
        return max(x for x, _ in cells)
    if i == 1:
        return max(y for _, y in cells)
    if i == 2:
        return -min(x for x, _ in cells)
    return -min(y for _, y in cells)


@dataclass
class Gait:
    """A cyclic straight move: phase cells and actions in the moving frame."""

    move: str
    cells: List[Cells]
    actions: List[Tuple[Action, ...]]
    shift: Coord

    @classmethod
    def from_path(cls, move: str, start: Cells, path: Sequence[Sequence[Action]], turn: int = 0) -> "Gait":
        f = LocalFrame((0, 0), turn)
        cells = [frozenset(f.to_world(c) for c in start)]
        acts = []
        for step in path:
            moved = tuple(map_action(a, f) for a in step)
            acts.append(moved)
            cells.append(apply_actions(cells[-1], moved))
        end = cells.pop()
        (ax, ay), _ = smallest_enclosing_rectangle(cells[0])
        (bx, by), _ = smallest_enclosing_rectangle(end)
        shift = (bx - ax, by - ay)
        if translate(cells[0], shift) != end:
            raise ValueError("path is not a translation cycle")
        return cls(move, cells, acts, shift)

    def __len__(self) -> int:
        return len(self.cells)

    def rule(self, p: int) -> Tuple[int, Rule]:
        idx, c = canon(self.cells[p])
        back = inverse_frame(c)
        return idx, Rule(self.move, p, tuple(map_action(a, back) for a in self.actions[p]), back)

    def growth(self, p: int) -> Tuple[int, ...]:
        """How far phase p's box reaches beyond phase 0's box in each moving direction."""
        return tuple(_extent(self.cells[p], i) - _extent(self.cells[0], i) for i in range(4))

    def need(self) -> Tuple[int, ...]:
        """Free cells a whole cycle needs beyond phase 0's box in each moving direction."""
        out = [0, 0, 0, 0]
        for p, acts in enumerate(self.actions):
            reach = set(self.cells[p]) | swept_cells(acts)
            for i in range(4):
                out[i] = max(out[i], _extent(reach, i) - _extent(self.cells[0], i))
        return tuple(out)


MOVES = ("M_UR", "M_LL", "T_TW", "T_BW", "T_TC", "T_LW", "T_RW", "M_RW", "T_BC")


# ------------------------------------------------------------------ gaits

Step = Tuple[Action, ...]


def _r(mover: Coord, pivot: Coord, sense: str) -> Action:
    return Action(Kind.ROTATE, mover, pivot=pivot, sense=sense)


def _s(mover: Coord, direction: Coord, length: int = 1) -> Action:
    return Action(Kind.SLIDE, mover, direction=direction, length=length)


# (start shape index, quarter turn of the moving frame, steps in the start frame)
GAIT_PATHS: Dict[str, Tuple[int, int, Tuple[Step, ...]]] = {
    # P L' F' W V, climbing one cell right and one up per cycle
    "M_UR": (
        5,
        0,
        (
            (_s((0, 2), (1, 0)), _r((1, 0), (1, 1), "CCW")),
            (_s((0, 0), (1, 0), 2),),
            (_s((0, 1), (0, 1)),),
            (_r((0, 2), (1, 2), "CW"), _r((2, 0), (2, 1), "CCW")),
            (_r((3, 1), (2, 1), "CCW"),),
        ),
    ),
    "M_LL": (
        3,
        2,
        (
            (_r((0, 0), (0, 1), "CCW"), _s((0, 3), (1, 0))),
            (_s((0, 2), (0, 1)),),
            (_r((0, 3), (1, 3), "CW"),),
            (_s((0, 1), (0, 1), 2), _r((1, 4), (1, 3), "CW")),
            (_r((0, 3), (1, 3), "CW"),),
        ),
    ),
    # T and F' walking along a wall
    "M_RW": (
        9,
        3,
        (
            (_s((0, 0), (1, 0), 2), _s((0, 2), (1, 0))),
            (_r((0, 1), (1, 1), "CCW"), _r((2, 0), (2, 1), "CCW")),
        ),
    ),
}


def build_gaits() -> Dict[str, Gait]:
    return {m: Gait.from_path(m, frozenset(CLASSES[i]), path, turn) for m, (i, turn, path) in GAIT_PATHS.items()}


STRAIGHT = ("M_UR", "M_LL", "M_RW")
BOOT = "BOOT"
# turn -> (straight move it must reach, quarter turns from the trigger frame, diagonal line offset)
TURN_GOALS: Dict[str, Tuple[str, int, Optional[int]]] = {
    "T_TW": ("M_LL", 0, 1),
    "T_BW": ("M_UR", 0, 1),
    "T_TC": ("M_UR", 2, 0),
    "T_RW": ("M_RW", 0, None),
    "T_LW": ("M_UR", 3, None),
    "T_BC": ("M_UR", 1, None),
}
TURN_SOURCES = {"T_TW": "M_UR", "T_TC": "M_UR", "T_RW": "M_UR", "T_BW": "M_LL", "T_LW": "M_LL", "T_BC": "M_RW"}
REFERENCE_FIELDS = ((16, 10), (12, 8), (24, 14), (30, 20))
# Extra fields walked during synthesis so odd heights and other aspect ratios get rules too.
# The reference fields come first, so their rules do not depend on the extras.
EXTRA_FIELDS = ((12, 9), (14, 9), (13, 8), (17, 11), (20, 13), (11, 9), (15, 11), (10, 7), (12, 7), (20, 7))
SYNTHESIS_FIELDS = REFERENCE_FIELDS + EXTRA_FIELDS


# ------------------------------------------------------ rendezvous search


class RendezvousSynth:
    """Fills the ``(shape, gaps) -> rule`` table.

    The three straight gaits are claimed first for every gap combination
    that leaves them room.  The table is then grown by simulating every
    start placement on the given fields: whenever a system reaches a key
    with no rule, a breadth-first search over free steps finds a short path
    to the situation it should reach (the goal of the pending turn, or any
    gait shape when booting) and commits the path's keys.  Keys that trigger
    a turn are reserved, so a search never passes through one.
    """

    def __init__(self, gaits: Dict[str, Gait], tau: int = 1, tau_corner: int = 1, wall_gap: int = 0,
                 radius: int = 3, max_movers: int = 3):
        self.gaits = gaits
        self.tau, self.tau_c, self.g_rw = tau, tau_corner, wall_gap
        self.radius, self.mm = radius, max_movers
        self.table: Dict[Key, Rule] = {}
        t = tau
        self._claim(gaits["M_UR"], (t + 1, t + 1, 0, 0), {})
        self._claim(gaits["M_LL"], (0, 0, t + 1, t + 1), {})
        self._claim(gaits["M_RW"], (0, 0, 0, tau_corner + 1), {0: wall_gap})
        self.phase0 = {m: g.rule(0) for m, g in gaits.items()}
        self.reserved = set()
        for move, (idx, rule) in self.phase0.items():
            rho = rule.frame.rotation
            for g in itertools.product(range(CAP + 1), repeat=4):
                if self.trigger_of(move, g):
                    self.reserved.add((idx, _to_canonical(g, rho)))

    def trigger_of(self, move: str, g: Sequence[int]) -> Optional[str]:
        """The turn a phase-0 system of ``move`` starts at moving-frame gaps ``g``."""
        gx, gy, gmx, gmy = g
        t = self.tau
        if move == "M_UR":
            if gy == t and gx in (t, t + 1):
                return "T_TC"
            if gy == t and gx >= t + 2:
                return "T_TW"
            if gx == t and gy >= t + 1:
                return "T_RW"
        elif move == "M_LL":
            if gmy == t and gmx >= t:
                return "T_BW"
            if gmx == t and gmy >= t + 1:
                return "T_LW"
        elif gx == self.g_rw and gmy == self.tau_c:
            return "T_BC"
        return None

    def _claim(self, g: Gait, trig: Sequence[int], exact: Dict[int, int]) -> None:
        need = g.need()
        lo = [max(need[i], trig[i]) for i in range(4)]
        for p in range(len(g)):
            idx, rule = g.rule(p)
            e = g.growth(p)
            ranges = []
            for i in range(4):
                if i in exact:
                    ranges.append([exact[i] - e[i]])
                else:
                    ranges.append(range(max(0, lo[i] - e[i]), CAP + 1))
            for gaps in itertools.product(*ranges):
                k = (idx, _to_canonical(gaps, rule.frame.rotation))
                if k in self.table:
                    raise ValueError(f"{g.move} phase {p} collides with {self.table[k].move} at {k}")
                self.table[k] = rule

    # -- simulation helpers

    def info(self, cells: Cells, w: int, h: int) -> Optional[Tuple[Key, LocalFrame]]:
        idx, fs = frames(cells)
        if len(fs) != 1:
            return None
        return (idx, frame_gaps(world_gaps(cells, w, h), fs[0].rotation)), fs[0]

    def trigger(self, cells: Cells, w: int, h: int) -> Optional[Tuple[str, LocalFrame]]:
        inf = self.info(cells, w, h)
        if inf is None:
            return None
        k, f = inf
        wg = world_gaps(cells, w, h)
        for move in STRAIGHT:
            idx, rule = self.phase0[move]
            if idx != k[0]:
                continue
            m = f.compose(rule.frame)
            turn = self.trigger_of(move, frame_gaps(wg, m.rotation))
            if turn:
                return turn, m
        return None

    def goal(self, turn: str, m: LocalFrame, w: int, h: int) -> Callable[[Cells], bool]:
        move, dr, line = TURN_GOALS[turn]

        def pred(cells: Cells) -> bool:
            inf = self.info(cells, w, h)
            if inf is None:
                return False
            k, f = inf
            r = self.table.get(k)
            if r is None or r.move != move or r.phase != 0:
                return False
            n = f.compose(r.frame)
            if n.rotation != (m.rotation + dr) % 4:
                return False
            if line is not None:
                d = m.to_local(n.origin)
                return d[0] - d[1] == line
            return True

        return pred

    def on_gait(self, w: int, h: int) -> Callable[[Cells], bool]:
        def pred(cells: Cells) -> bool:
            inf = self.info(cells, w, h)
            if inf is None:
                return False
            r = self.table.get(inf[0])
            return r is not None and r.move in STRAIGHT

        return pred

    def step(self, cells: Cells, w: int, h: int):
        inf = self.info(cells, w, h)
        if inf is None:
            return "symmetric", None, None
        k, f = inf
        r = self.table.get(k)
        if r is None:
            return "unassigned", k, None
        acts = [map_action(a, f) for a in r.actions]
        if not inside(swept_cells(acts), w, h):
            return "invalid", k, r
        return "ok", apply_actions(cells, acts), r

    def search(self, start: Cells, w: int, h: int, pred: Callable[[Cells], bool]):
        (x0, y0), (x1, y1) = smallest_enclosing_rectangle(start)
        rad = self.radius

        def near(c: Cells) -> bool:
            return all(x0 - rad <= x <= x1 + rad and y0 - rad <= y <= y1 + rad for x, y in c)

        parent: Dict[Cells, Optional[Tuple[Cells, Optional[Tuple[Action, ...]]]]] = {start: None}
        q = deque([start])
        while q:
            cur = q.popleft()
            if cur != start and pred(cur):
                path = []
                n = cur
                while parent[n] is not None:
                    prev, acts = parent[n]  # type: ignore[misc]
                    path.append((prev, acts))
                    n = prev
                path.reverse()
                if self._consistent(path, w, h):
                    return path
                continue
            if cur != start and self.info(cur, w, h)[0] in self.reserved:  # type: ignore[index]
                continue
            st, nxt, _ = self.step(cur, w, h)
            if st == "ok":
                if nxt not in parent and near(nxt):
                    parent[nxt] = (cur, None)
                    q.append(nxt)
            elif st == "unassigned":
                for fs in free_steps(cur, self.mm):
                    if not inside(fs.swept, w, h):
                        continue
                    nxt = fs.result
                    if nxt in parent or not near(nxt) or len(frames(nxt)[1]) != 1:
                        continue
                    parent[nxt] = (cur, fs.actions)
                    q.append(nxt)
        return None

    def _consistent(self, path, w: int, h: int) -> bool:
        seen: Dict[Key, Tuple[Action, ...]] = {}
        for prev, acts in path:
            k, f = self.info(prev, w, h)  # type: ignore[misc]
            if k in self.table:
                continue
            ca = tuple(sorted((unmap_action(a, f) for a in acts), key=lambda a: a.mover))
            if seen.setdefault(k, ca) != ca:
                return False
        return True

    def commit(self, path, w: int, h: int, move: str, phase: int = 0) -> None:
        for i, (prev, acts) in enumerate(path):
            k, f = self.info(prev, w, h)  # type: ignore[misc]
            if k in self.table:
                continue
            ca = tuple(unmap_action(a, f) for a in acts)
            self.table[k] = Rule(move, phase + i, ca, LocalFrame((0, 0), 0))

    def at_corner(self, cells: Cells, w: int, h: int, slack: int = 3) -> bool:
        inf = self.info(cells, w, h)
        if inf is None:
            return False
        k, f = inf
        r = self.table.get(k)
        if r is None or r.move != "M_UR" or r.phase != 0:
            return False
        m = f.compose(r.frame)
        e, n, wg, s = world_gaps(cells, w, h)
        return (m.rotation == 0 and wg <= slack and s <= slack) or (m.rotation == 2 and e <= slack and n <= slack)

    def check(self, w: int, h: int, extend: bool = True, budget: Optional[int] = None) -> List[tuple]:
        """Walk every start placement to an acute corner; grow the table if ``extend``."""
        budget = budget or 40 * (w + h)
        good: set = set()
        fails = []
        for start in start_placements(w, h):
            cur = start
            seen: List[Cells] = []
            ctx = None
            t = tph = 0
            while True:
                if cur in good or self.at_corner(cur, w, h):
                    good.update(seen)
                    break
                if t > budget or cur in seen[-200:]:
                    fails.append(("loop", start))
                    break
                trig = self.trigger(cur, w, h)
                st, nxt, r = self.step(cur, w, h)
                if st == "unassigned":
                    if not extend:
                        fails.append(("unassigned", start, cur))
                        break
                    if trig and ctx is None:
                        ctx, tph = trig, 0
                    pred = self.goal(ctx[0], ctx[1], w, h) if ctx else self.on_gait(w, h)
                    path = self.search(cur, w, h, pred)
                    if path is None:
                        fails.append(("no path", start, cur))
                        break
                    self.commit(path, w, h, ctx[0] if ctx else BOOT, tph if ctx else 0)
                    continue
                if st != "ok":
                    fails.append((st, start, cur))
                    break
                if r.move in STRAIGHT:
                    ctx = None
                elif trig and ctx is None:
                    ctx, tph = trig, 0
                if ctx:
                    tph += 1
                seen.append(cur)
                cur = nxt
                t += 1
        return fails


def _to_canonical(g: Sequence[int], rho: int) -> Tuple[int, int, int, int]:
    """Moving-frame gaps to canonical-frame gaps, given the canonical-to-moving turn."""
    out = [0, 0, 0, 0]
    for i in range(4):
        out[(i + rho) % 4] = g[i]
    return tuple(out)  # type: ignore[return-value]


def start_placements(w: int, h: int) -> List[Cells]:
    """Every placement of every non-symmetric shape, in a fixed order."""
    out = []
    for fixed in fixed_forms():
        cells = frozenset(fixed)
        if len(frames(cells)[1]) != 1:
            continue
        _, (c, d) = smallest_enclosing_rectangle(cells)
        for x in range(w - c):
            for y in range(h - d):
                out.append(translate(cells, (x, y)))
    return out


@lru_cache(maxsize=None)
def fixed_forms() -> Tuple[Tuple[Coord, ...], ...]:
    """The 63 five-cell shapes up to translation only, sorted."""
    out = set()
    for c in CLASSES:
        for r in range(4):
            out.add(tuple(sorted(normalize(frozenset(rotate(p, r) for p in c)))))
    return tuple(sorted(out))


def synthesize_rendezvous(fields: Sequence[Tuple[int, int]] = REFERENCE_FIELDS, rounds: int = 3) -> RendezvousSynth:
    synth = RendezvousSynth(build_gaits())
    for _ in range(rounds):
        grew = False
        for w, h in fields:
            for _attempt in range(4):
                n0 = len(synth.table)
                fails = synth.check(w, h, extend=True)
                grew |= len(synth.table) != n0
                if not fails:
                    break
        if not grew:
            break
    return synth


# ------------------------------------------------------------ merge tables

ANCHOR = 17  # X
TRAVELERS = (11, 14)  # F, F'
NAMES = ("I", "L", "Y", "Y'", "L'", "P", "U", "V", "P'", "T", "N", "F", "W", "Z", "F'", "S", "N'", "X")

Box2 = Tuple[Coord, Coord]


@lru_cache(maxsize=None)
def class_steps() -> Dict[int, Tuple[Tuple[Tuple[Action, ...], Cells, int], ...]]:
    """For each shape, the free steps of its canonical placement that change the shape."""
    out = {}
    for i, c in enumerate(CLASSES):
        cells = frozenset(c)
        out[i] = tuple((s.actions, s.result, frames(s.result)[0]) for s in free_steps(cells, 4)
                       if frames(s.result)[0] != i)
    return out


def _inflate(box: Box2, k: int = 1) -> Box2:
    (x0, y0), (x1, y1) = box
    return (x0 - k, y0 - k), (x1 + k, y1 + k)


def _in_box(cells: Iterable[Coord], box: Box2) -> bool:
    (x0, y0), (x1, y1) = box
    return all(x0 <= x <= x1 and y0 <= y <= y1 for x, y in cells)


def chain_ok(start: Cells, table: Dict[int, Tuple[Action, ...]], stop: Iterable[int]) -> Optional[bool]:
    """Does following ``table`` from ``start`` reach ``stop`` while leaving the start box
    by at most one cell, in at most one excursion, whichever symmetric frame is used?
    ``None`` when the chain runs into a shape the table does not cover yet."""
    stop = set(stop)
    box0 = smallest_enclosing_rectangle(start)
    big = _inflate(box0)

    def rec(cells: Cells, out_before: bool, episodes: int, depth: int) -> Optional[bool]:
        if depth > 20:
            return False
        i, fs = frames(cells)
        if i in stop:
            return True
        if i not in table:
            return None
        for f in fs:
            acts = [map_action(a, f) for a in table[i]]
            nxt = apply_actions(cells, acts)
            touched = nxt | swept_cells(acts)
            if not _in_box(touched, big):
                return False
            out = not _in_box(touched, box0)
            ep = episodes + (1 if out and not out_before else 0)
            if ep > 1:
                return False
            r = rec(nxt, out, ep, depth + 1)
            if r is not True:
                return r
        return True

    return rec(frozenset(start), False, 0, 0)


# wall contexts a transformation must survive: none, one side, two adjacent sides
WALL_CONTEXTS: Tuple[Tuple[int, ...], ...] = ((),) + tuple((d,) for d in range(4)) + tuple((d, (d + 1) % 4) for d in range(4))


def _exits(step, i: int, sides: Iterable[int]) -> bool:
    """Does a step of shape ``i`` (canonical placement) leave its box through one of ``sides``?"""
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(frozenset(CLASSES[i]))
    touched = step[1] | swept_cells(step[0])
    xs = [x for x, _ in touched]
    ys = [y for _, y in touched]
    limits = (max(xs) > x1, max(ys) > y1, min(xs) < x0, min(ys) < y0)
    return any(limits[d] for d in sides)


def _near_steps(i: int):
    """Shape-changing steps of ``i`` that stay within one cell of its box, in a fixed order."""
    box = _inflate(smallest_enclosing_rectangle(frozenset(CLASSES[i])))
    b0 = smallest_enclosing_rectangle(frozenset(CLASSES[i]))
    out = [s for s in class_steps()[i] if _in_box(s[1] | swept_cells(s[0]), box)]
    return sorted(out, key=lambda s: (0 if _in_box(s[1] | swept_cells(s[0]), b0) else 1, len(s[0])))


def label_order() -> List[int]:
    """Shape indices in label order: travelers first, anchor last.

    Every other shape needs, against any single wall or corner, one step to a
    higher label (to grow toward the anchor) and one to a lower label other
    than the anchor (to shrink toward a traveler); travelers need the former.
    A search over the set of shapes already placed (from the bottom) finds
    the first order, trying shapes by index, that meets this.
    """
    n = len(CLASSES)
    targets = {
        (i, c): frozenset(s[2] for s in _near_steps(i) if not _exits(s, i, c)) for i in range(n) for c in WALL_CONTEXTS
    }
    middle = tuple(i for i in range(n) if i not in TRAVELERS and i != ANCHOR)

    def down_ok(i: int, below: FrozenSet[int]) -> bool:
        return all((targets[(i, c)] - {ANCHOR}) & below for c in WALL_CONTEXTS)

    def up_ok(i: int, above: FrozenSet[int]) -> bool:
        return all(targets[(i, c)] & above for c in WALL_CONTEXTS)

    @lru_cache(maxsize=None)
    def solve(placed: FrozenSet[int]) -> Optional[Tuple[int, ...]]:
        rest = [m for m in middle if m not in placed]
        if not rest:
            return ()
        for i in rest:
            above = frozenset(r for r in rest if r != i) | {ANCHOR}
            if down_ok(i, placed) and up_ok(i, above):
                tail = solve(placed | {i})
                if tail is not None:
                    return (i,) + tail
        return None

    everything = frozenset(range(n))
    for first, second in (TRAVELERS, TRAVELERS[::-1]):
        if not (up_ok(first, everything - {first}) and up_ok(second, everything - {first, second})):
            continue
        tail = solve(frozenset((first, second)))
        if tail is not None:
            return [first, second, *tail, ANCHOR]
    raise ValueError("no label order gives every shape a wall-safe step")


def assign_transforms(rank: Dict[int, int], up: bool) -> Dict[int, Tuple[Tuple[Action, ...], Cells, int]]:
    """Backtracking choice of the default step per shape, monotone in ``rank``.

    Steps go up toward the anchor or down toward a traveler.  Shapes are
    handled nearest first; a choice is kept only if every chain built so far
    leaves its start box by at most one cell, at most once.
    """
    n = len(CLASSES)
    targets = {ANCHOR} if up else set(TRAVELERS)

    def allowed(i: int, j: int) -> bool:
        return rank[j] > rank[i] if up else (rank[j] < rank[i] and j != ANCHOR)

    rev: Dict[int, set] = {}
    for i in range(n):
        for s in _near_steps(i):
            if allowed(i, s[2]):
                rev.setdefault(s[2], set()).add(i)
    d = {t: 0 for t in targets}
    q = deque(sorted(targets))
    while q:
        v = q.popleft()
        for u in sorted(rev.get(v, ())):
            if u not in d:
                d[u] = d[v] + 1
                q.append(u)
    order = sorted((i for i in range(n) if i not in targets), key=lambda i: (d.get(i, 99), i))
    table: Dict[int, Tuple[Tuple[Action, ...], Cells, int]] = {}

    def bt(k: int) -> bool:
        if k == len(order):
            return True
        i = order[k]
        for s in _near_steps(i):
            if not allowed(i, s[2]):
                continue
            table[i] = s
            plain = {j: v[0] for j, v in table.items()}
            if all(chain_ok(frozenset(CLASSES[j]), plain, targets) for j in order[: k + 1]):
                if bt(k + 1):
                    return True
            del table[i]
        return False

    if not bt(0):
        raise ValueError("no transformation table meets the excursion bound")
    return table


def merge_transforms():
    """Label order, default increase/decrease steps and the wall fallbacks of each shape."""
    order = label_order()
    rank = {i: n for n, i in enumerate(order)}
    up = assign_transforms(rank, True)
    down = assign_transforms(rank, False)

    def fallbacks(table, is_up: bool):
        out = {}
        for i, default in table.items():
            alts = []
            for s in _near_steps(i):
                if s[0] == default[0]:
                    continue
                if rank[s[2]] > rank[i] if is_up else (rank[s[2]] < rank[i] and s[2] != ANCHOR):
                    alts.append(s[0])
            out[i] = tuple(alts)
        return out

    return (
        {i: s[0] for i, s in up.items()},
        {i: s[0] for i, s in down.items()},
        order,
        fallbacks(up, True),
        fallbacks(down, False),
    )


def _invert(a: Action) -> Action:
    d = destination(a)
    if a.kind is Kind.ROTATE:
        return Action(Kind.ROTATE, d, pivot=a.pivot, sense="CW" if a.sense == "CCW" else "CCW")
    return Action(Kind.SLIDE, d, direction=(-a.direction[0], -a.direction[1]), length=a.length)


def _shift(a: Action, d: Coord) -> Action:
    return a.transformed(lambda p: add(p, d))


def traveler_moves():
    """Moving frames and steps of the two travelers.

    F steps to F' and F' steps to F shifted one cell along +x; the minus
    moves are those steps run backwards.  A turn is a one-tick step between
    the travelers whose moving frame ends a quarter turn away.
    """
    f, fp = TRAVELERS
    a0 = frozenset(CLASSES[f])
    goal = translate(a0, (1, 0))
    cycle = None
    for acts, res, j in class_steps()[f]:
        if j != fp:
            continue
        for s in free_steps(res, 4):
            if s.result == goal:
                cycle = (acts, res, s.actions)
                break
        if cycle:
            break
    if cycle is None:
        raise ValueError("travelers have no two-step cycle")
    s1, res1, s2 = cycle
    frame = {f: LocalFrame((0, 0), 0), fp: inverse_frame(canon(res1)[1])}
    plus = {f: tuple(s1), fp: tuple(s2)}
    minus = {f: tuple(_shift(_invert(a), (-1, 0)) for a in s2), fp: tuple(_invert(a) for a in s1)}

    def moving(cells: Cells) -> LocalFrame:
        i, c = canon(cells)
        return c.compose(frame[i])

    turns = {}
    for i in TRAVELERS:
        cells = frozenset(CLASSES[i])
        m0 = moving(cells)
        for s in free_steps(cells, 4):
            j = frames(s.result)[0]
            if j in TRAVELERS:
                r = (moving(s.result).rotation - m0.rotation) % 4
                if r in (1, 3):
                    # the last such step in enumeration order is kept
                    turns[i] = (tuple(unmap_action(a, m0) for a in s.actions), r)
    return frame, plus, minus, turns


# ------------------------------------------------------- merge exceptions


def mirror_map(a: Cells, b: Cells) -> Optional[Callable[[Coord], Coord]]:
    """The quarter or half turn (plus translation) swapping ``a`` and ``b``, if any."""
    for r in (1, 2, 3):
        ar = frozenset(rotate(c, r) for c in a)
        t = sub(min(b), min(ar))
        if translate(ar, t) == b and translate(frozenset(rotate(c, r) for c in b), t) == a:
            return lambda p, r=r, t=t: add(rotate(p, r), t)
    return None


def repair_path(graph, state, limit: int = 20000):
    """Breadth-first search over mirrored joint free steps from a tied pattern
    to a pattern that is merged or already known to merge."""
    from . import merge as mg
    from .field import WorldState
    from .kinematics import StepError, validate_step

    parent = {state: None}
    q = deque([state])
    o = graph.OFFSET
    while q:
        cur = q.popleft()
        a, b = frozenset(cur[0]), frozenset(cur[1])
        t = mirror_map(a, b)
        if t is None:
            continue
        for fs in free_steps(a, 3):
            acts_a = fs.actions
            acts_b = tuple(x.transformed(t) for x in acts_a)
            w = WorldState(graph.FIELD, translate(a, (o, o)), translate(b, (o, o)))
            try:
                validate_step(w, [_shift(x, (o, o)) for x in acts_a], [_shift(x, (o, o)) for x in acts_b])
            except StepError:
                continue
            na, nb = apply_actions(a, acts_a), apply_actions(b, acts_b)
            nk = mg.canonical_pattern(na, nb)[0]
            if nk in parent:
                continue
            parent[nk] = (cur, acts_a, acts_b)
            known = graph.memo.get(nk)
            if is_connected(na | nb) or (known is not None and known.status == "ok"):
                path = []
                n = nk
                while parent[n] is not None:
                    p, x, y = parent[n]
                    path.append((p, x, y))
                    n = p
                return path[::-1]
            if len(parent) < limit:
                q.append(nk)
    return None


def synthesize_exceptions(catalog, starts, rounds: int = 5) -> None:
    """Add joint-pattern overrides to ``catalog.merge.exceptions`` until the sweep passes."""
    from .verify import MergeGraph, merge_exhaustive

    exc = catalog.merge.exceptions
    for _ in range(rounds):
        graph = MergeGraph(catalog)
        for pat in starts[0]:
            graph.settle(pat)
        bad = sorted({s.at for s in graph.memo.values() if s.status != "ok" and s.at is not None})
        if not bad:
            break
        for s in bad:
            if s in exc:
                continue
            path = repair_path(graph, s)
            if path is None:
                continue
            for p, x, y in path:
                exc.setdefault(p, (x, y))
    if not merge_exhaustive(catalog, starts=starts).ok:
        raise ValueError("merge sweep still fails after exception search")


# ---------------------------------------------------------------- catalog


def build_catalog(path=None, rendezvous_fields: Sequence[Tuple[int, int]] = SYNTHESIS_FIELDS):
    """Run every search and write the catalog JSON (to the packaged location by default)."""
    import hashlib

    from .catalog import (
        Catalog,
        GaitPhase,
        GaitTable,
        MergeTables,
        RendezvousRule,
        RendezvousTables,
        TravelerSpec,
        TurnContract,
        default_path,
    )
    from .shapes import ShapeClass
    from .verify import merge_start_classes

    up, down, order, up_alt, down_alt = merge_transforms()
    label = {idx: n + 1 for n, idx in enumerate(order)}
    shapes = []
    for idx in order:
        roles = []
        if idx == ANCHOR:
            roles.append("anchor")
        if idx in TRAVELERS:
            roles.append("traveler")
        shapes.append(ShapeClass(label[idx], NAMES[idx], CLASSES[idx], rotational_symmetries(CLASSES[idx]), tuple(roles)))

    synth = synthesize_rendezvous(rendezvous_fields)
    rules = {
        (label[idx], gaps): RendezvousRule(r.move, r.phase, r.actions, r.frame)
        for (idx, gaps), r in synth.table.items()
    }
    gaits = {}
    for move, g in synth.gaits.items():
        phases = tuple(
            GaitPhase(label[frames(c)[0]], tuple(sorted(c)), tuple(sorted(a, key=lambda x: x.mover)))
            for c, a in zip(g.cells, g.actions)
        )
        gaits[move] = GaitTable(move, g.shift, phases)
    turns = {
        t: TurnContract(t, TURN_SOURCES[t], target, rot, line) for t, (target, rot, line) in TURN_GOALS.items()
    }
    rz = RendezvousTables(CAP, synth.tau, synth.tau_c, synth.g_rw, rules, gaits, turns)

    frame, plus, minus, turn = traveler_moves()
    travelers = {
        label[i]: TravelerSpec(label[i], frame[i], plus[i], minus[i], turn[i][0], turn[i][1]) for i in TRAVELERS
    }
    mt = MergeTables(
        {label[i]: a for i, a in up.items()},
        {label[i]: a for i, a in down.items()},
        travelers,
        {},
        {label[i]: a for i, a in up_alt.items()},
        {label[i]: a for i, a in down_alt.items()},
    )
    cat = Catalog("", shapes, rz, mt)
    synthesize_exceptions(cat, merge_start_classes())
    digest = hashlib.sha256(cat.dumps().encode()).hexdigest()[:12]
    cat = Catalog(f"1.{digest}", shapes, rz, mt)
    out = path or default_path()
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(cat.dumps())
    return cat
