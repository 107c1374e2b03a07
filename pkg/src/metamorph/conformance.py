"""Checks that the frozen rule tables keep their contracts.

Every check runs the tables through the kinematics layer rather than
trusting how they were built:

* every rendezvous rule is laid into a field that realises its wall
  context and its joint step must pass :func:`validate_step`;
* no two rules share a pattern (shape plus wall context) up to rotation;
* one cycle of each straight move, driven by the controller itself,
  translates the system by the contracted amount in its moving frame;
* each turn lands on its successor's diagonal with the contracted shift;
* the merge transformations are legal, monotone in the label, stay within
  one cell of the starting box, and end where they should; the traveler
  walks translate along x; every exception is a legal joint step.

Each function returns a list of problems (empty when the tables conform),
so tests can print them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import rendezvous as rv
from .catalog import Catalog, load_catalog
from .field import Cells, Coord, Field, GridError, LocalFrame, WorldState, normalize, rotate_cells
from .field import smallest_enclosing_rectangle
from .kinematics import Action, StepError, apply_step, validate_step

# straight moves: net translation of one cycle in the moving frame
DISPLACEMENT: Dict[str, Coord] = {"M_UR": (1, 1), "M_LL": (-1, -1), "M_RW": (0, -1)}
# turns with a diagonal line on both sides: lateral offset of the new line
TURN_SHIFT: Dict[str, int] = {"T_TW": 1, "T_BW": 1, "T_TC": 0}
OPEN = Field(40, 30)


def _translate(cells: Iterable[Coord], d: Coord) -> Cells:
    return frozenset((x + d[0], y + d[1]) for x, y in cells)


def _box(cells: Iterable[Coord]) -> Tuple[int, int, int, int]:
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    return x0, y0, x1, y1


# ------------------------------------------------------------ rendezvous


def rule_world(cat: Catalog, label: int, gaps: Sequence[int]) -> Optional[Tuple[WorldState, LocalFrame]]:
    """A lone system whose key is ``(label, gaps)``, and its canonical placement frame.

    A capped gap means "at least cap", so one is widened by a cell when
    the field would otherwise come out square.  Returns None if no
    rectangle with width above height realises the key.
    """
    shape = cat.shape(label)
    bw, bh = shape.box
    cap = cat.rendezvous.cap
    for widen in (None, 0, 1, 2, 3):
        g = list(gaps)
        if widen is not None:
            if g[widen] < cap:
                continue
            g[widen] += 1
        for r in range(4):
            f = LocalFrame((0, 0), r)
            # world gaps (E, N, W, S) of the canonical shape turned by r
            world = [g[(i - r) % 4] for i in range(4)]
            ww, hh = (bw, bh) if r % 2 == 0 else (bh, bw)
            fw, fh = ww + world[0] + world[2], hh + world[1] + world[3]
            if fw <= fh:
                continue
            turned = [f.to_world(c) for c in shape.cells]
            x0, y0, _, _ = _box(turned)
            frame = LocalFrame((world[2] - x0, world[3] - y0), r)
            cells = frozenset(frame.to_world(c) for c in shape.cells)
            field = Field(fw, fh)
            placed = cat.placements(cells)
            if len(placed) != 1 or placed[0].label != label:
                continue
            key = rv.frame_gaps(rv.gaps_in(cells, field), placed[0].frame.rotation, cap)
            if key == tuple(gaps):
                return WorldState(field, cells, frozenset()), placed[0].frame
    return None


def unrealisable_keys(cat: Optional[Catalog] = None) -> List[Tuple[int, Tuple[int, ...]]]:
    """Rule keys no field can produce (the straight moves claim every gap combination)."""
    cat = cat or load_catalog()
    return [k for k in sorted(cat.rendezvous.rules) if rule_world(cat, *k) is None]


def rule_problems(cat: Optional[Catalog] = None) -> List[str]:
    """Every rendezvous rule that can occur must be a legal step where it occurs."""
    cat = cat or load_catalog()
    out = []
    for (label, gaps), rule in sorted(cat.rendezvous.rules.items()):
        got = rule_world(cat, label, gaps)
        if got is None:
            continue
        w, frame = got
        acts = [a.transformed(frame.to_world) for a in rule.actions]
        try:
            validate_step(w, acts, ())
        except StepError as e:
            out.append(f"{rule.move} phase {rule.phase} at {label}/{gaps}: {e}")
    return out


def pattern_form(cells: Iterable[Coord], gaps: Sequence[int]) -> Tuple[Tuple[Coord, ...], Tuple[int, ...]]:
    """Least rotation of (cells, capped wall gaps E N W S) under quarter turns."""
    best = None
    for r in range(4):
        c = tuple(sorted(normalize(rotate_cells(cells, r))))
        g = tuple(gaps[(i - r) % 4] for i in range(4))
        if best is None or (c, g) < best:
            best = (c, g)
    assert best is not None
    return best


def pattern_clashes(cat: Optional[Catalog] = None) -> List[str]:
    """Patterns claimed by two different (move, phase) entries."""
    cat = cat or load_catalog()
    owner: Dict[tuple, Tuple[str, int]] = {}
    out = []
    for (label, gaps), rule in cat.rendezvous.rules.items():
        form = pattern_form(cat.shape(label).cells, gaps)
        prev = owner.setdefault(form, (rule.move, rule.phase))
        if prev != (rule.move, rule.phase):
            out.append(f"{prev} and {(rule.move, rule.phase)} share pattern {form}")
    if len(owner) != len(cat.rendezvous.rules):
        out.append(f"{len(cat.rendezvous.rules)} rules but only {len(owner)} distinct patterns")
    return out


def straight_shapes_disjoint(cat: Optional[Catalog] = None) -> List[str]:
    """Phase shapes of the two diagonal moves never coincide (walls aside)."""
    cat = cat or load_catalog()
    ur = {p.label for p in cat.rendezvous.gaits["M_UR"].phases}
    ll = {p.label for p in cat.rendezvous.gaits["M_LL"].phases}
    return [f"M_UR and M_LL share shapes {sorted(ur & ll)}"] if ur & ll else []


def cycle_displacement(move: str, cat: Optional[Catalog] = None) -> Tuple[Coord, List[str]]:
    """Drive one cycle of ``move`` with the controller and measure it in the moving frame."""
    cat = cat or load_catalog()
    gait = cat.rendezvous.gaits[move]
    field = OPEN
    start_local = frozenset(gait.phases[0].cells)
    if move == "M_RW":
        # walks south with the wall on its east side, wall_gap cells away
        x1 = max(x for x, _ in start_local)
        origin = (field.w - 1 - cat.rendezvous.wall_gap - x1, 20)
    else:
        origin = (15, 12)
    frame = LocalFrame(origin, 0)
    cells = frozenset(frame.to_world(c) for c in start_local)
    w = WorldState(field, cells, frozenset())
    problems = []
    for p in range(len(gait.phases)):
        d = rv.system_decision(w.r1, field, cat)
        if (d.move, d.phase) != (move, p):
            problems.append(f"{move}: tick {p} recognised as {d.move} phase {d.phase}")
            return (0, 0), problems
        try:
            w = apply_step(w, validate_step(w, d.actions, ()))
        except StepError as e:
            problems.append(f"{move} phase {p}: {e}")
            return (0, 0), problems
    a, b = _box(cells), _box(w.r1)
    shift = (b[0] - a[0], b[1] - a[1])
    if _translate(cells, shift) != w.r1:
        problems.append(f"{move}: one cycle is not a translation")
    return shift, problems


@dataclass(frozen=True)
class TurnLanding:
    turn: str
    source: str
    target: str
    rotation: int  # quarter turns from the source's moving frame to the target's
    shift: int  # offset of the target's diagonal line, measured in the source frame


def turn_landings(field: Field, cat: Optional[Catalog] = None, starts: Optional[Iterable[Cells]] = None,
                  limit: int = 400) -> List[TurnLanding]:
    """Every straight-turn-straight passage seen while lone systems roam ``field``."""
    from .verify import fixed_forms

    cat = cat or load_catalog()
    if starts is None:
        starts = []
        for form in fixed_forms():
            if cat.shape_of(form).symmetric:
                continue
            ex = max(x for x, _ in form)
            ey = max(y for _, y in form)
            for dx in range(field.w - ex):
                for dy in range(field.h - ey):
                    starts.append(_translate(form, (dx, dy)))
    seen_cells: set = set()
    out = set()
    for cells in starts:
        w = WorldState(field, cells, frozenset())
        last: Optional[Tuple[str, LocalFrame]] = None
        turn: Optional[str] = None
        for _ in range(limit):
            move, phase, m = rv.moving_frame(w.r1, field, cat)
            if move in rv.STRAIGHT and phase == 0 and m is not None:
                if last is not None and turn is not None:
                    src, mf = last
                    d = mf.to_local(m.origin)
                    out.add(TurnLanding(turn, src, move, (m.rotation - mf.rotation) % 4, d[0] - d[1]))
                last, turn = (move, m), None
            elif move in rv.STRAIGHT:
                pass
            elif move == rv.BOOTSTRAP:
                last = turn = None
            elif turn is None:
                turn = move
            elif turn != move:
                last = turn = None
            if w.r1 in seen_cells:
                break
            seen_cells.add(w.r1)
            d = rv.system_decision(w.r1, field, cat)
            w = apply_step(w, validate_step(w, d.actions, ()))
    return sorted(out, key=lambda t: (t.turn, t.source, t.target, t.rotation, t.shift))


def turn_problems(landings: Sequence[TurnLanding], cat: Optional[Catalog] = None) -> List[str]:
    """Landings that break a turn contract, plus turns that were never seen."""
    cat = cat or load_catalog()
    out = []
    seen = set()
    for t in landings:
        c = cat.rendezvous.turns[t.turn]
        seen.add(t.turn)
        if (t.source, t.target, t.rotation) != (c.source, c.target, c.rotation):
            out.append(f"{t.turn} went {t.source}->{t.target} turning {t.rotation}")
        if c.shift is not None and t.shift != c.shift:
            out.append(f"{t.turn} shifted the line by {t.shift}, contract says {c.shift}")
    for name in TURN_SHIFT:
        if cat.rendezvous.turns[name].shift != TURN_SHIFT[name]:
            out.append(f"{name} contract shift is {cat.rendezvous.turns[name].shift}")
    missing = set(cat.rendezvous.turns) - seen
    if missing:
        out.append(f"turns never taken: {sorted(missing)}")
    return out


# ------------------------------------------------------------------ merge


def _open_world(cells: Iterable[Coord], other: Iterable[Coord] = ()) -> WorldState:
    return WorldState(OPEN, _translate(cells, (18, 12)), _translate(other, (18, 12)))


def _step_in_open(cells: Cells, actions: Sequence[Action]) -> Cells:
    w = _open_world(cells)
    moved = [a.transformed(lambda p: (p[0] + 18, p[1] + 12)) for a in actions]
    out = apply_step(w, validate_step(w, moved, ())).r1
    return _translate(out, (-18, -12))


@dataclass(frozen=True)
class Chain:
    start: int
    labels: Tuple[int, ...]  # labels visited after the start, in order
    excursions: int  # separate occasions on which the system left its starting box
    overshoot: int  # largest distance outside that box


def transform_chain(cat: Catalog, label: int, kind: str, limit: int = 40) -> Chain:
    """Run the increase or decrease table from the canonical shape of ``label`` in the open."""
    from .merge import MergePolicy, _place

    pol = MergePolicy(cat)
    table = getattr(cat.merge, kind)
    cells = frozenset(cat.shape(label).cells)
    x0, y0, x1, y1 = _box(cells)
    labels: List[int] = []
    excursions = overshoot = 0
    outside = False
    cur = label
    while cur in table and len(labels) < limit:
        frame = pol.label_view(cells, cells)[2]
        cells = _step_in_open(cells, _place(table[cur], frame))
        cur = cat.label_of(cells)
        labels.append(cur)
        a0, b0, a1, b1 = _box(cells)
        out = max(x0 - a0, y0 - b0, a1 - x1, b1 - y1, 0)
        if out and not outside:
            excursions += 1
        outside = out > 0
        overshoot = max(overshoot, out)
    return Chain(label, tuple(labels), excursions, overshoot)


def merge_problems(cat: Optional[Catalog] = None) -> List[str]:
    cat = cat or load_catalog()
    anchor = cat.with_role("anchor")[0].label
    travelers = {s.label for s in cat.with_role("traveler")}
    out = []
    for kind, sign in (("increase", 1), ("decrease", -1)):
        table = getattr(cat.merge, kind)
        fallbacks = getattr(cat.merge, f"{kind}_fallbacks")
        for label in sorted(table):
            for n, acts in enumerate((table[label],) + fallbacks.get(label, ())):
                try:
                    nxt = cat.label_of(_step_in_open(frozenset(cat.shape(label).cells), acts))
                except (StepError, GridError) as e:
                    out.append(f"{kind} step {n} of label {label}: {e}")
                    continue
                if (nxt - label) * sign <= 0:
                    out.append(f"{kind} step {n} of label {label} goes to {nxt}")
                if kind == "decrease" and nxt == anchor:
                    out.append(f"decrease step {n} of label {label} visits the anchor")
    for label in range(1, len(cat.shapes) + 1):
        if label != anchor:
            up = transform_chain(cat, label, "increase")
            if not up.labels or up.labels[-1] != anchor or len(up.labels) > 17:
                out.append(f"increase from {label} ends {up.labels}")
            if up.overshoot > 1 or up.excursions > 1:
                out.append(f"increase from {label} leaves its box {up.excursions} times, by up to {up.overshoot}")
        if label not in travelers:
            down = transform_chain(cat, label, "decrease")
            if not down.labels or down.labels[-1] not in travelers:
                out.append(f"decrease from {label} ends {down.labels}")
            if down.overshoot > 1 or down.excursions > 1:
                out.append(f"decrease from {label} leaves its box {down.excursions} times, by up to {down.overshoot}")
    out += traveler_problems(cat)
    out += exception_problems(cat)
    return out


def traveler_cycle(cat: Catalog, label: int, direction: str, limit: int = 8) -> Tuple[Coord, int, List[str]]:
    """Repeat ``plus`` or ``minus`` from the canonical traveler until its shape returns.

    Returns the translation in the starting moving frame, the number of
    ticks, and any problems met on the way.
    """
    from .merge import MergePolicy, _place

    pol = MergePolicy(cat)
    start = cells = frozenset(cat.shape(label).cells)
    m0 = pol.label_view(cells, cells)[2].compose(cat.merge.travelers[label].frame)
    for tick in range(1, limit + 1):
        lab = cat.label_of(cells)
        if lab not in cat.merge.travelers:
            return (0, 0), tick, [f"{direction} from {label} left the travelers at label {lab}"]
        m = pol.label_view(cells, cells)[2].compose(cat.merge.travelers[lab].frame)
        try:
            cells = _step_in_open(cells, _place(getattr(cat.merge.travelers[lab], direction), m))
        except StepError as e:
            return (0, 0), tick, [f"{direction} from {label}, tick {tick}: {e}"]
        if cat.label_of(cells) == label:
            local = frozenset(m0.to_local(c) for c in start)
            moved = frozenset(m0.to_local(c) for c in cells)
            a, b = _box(local), _box(moved)
            d = (b[0] - a[0], b[1] - a[1])
            if _translate(local, d) != moved:
                return d, tick, [f"{direction} cycle of {label} turns the shape"]
            return d, tick, []
    return (0, 0), limit, [f"{direction} from {label} never returns to its shape"]


def traveler_problems(cat: Optional[Catalog] = None) -> List[str]:
    """Both walks move the traveler along its moving frame's x axis, in opposite senses."""
    cat = cat or load_catalog()
    out = []
    for label in sorted(cat.merge.travelers):
        for direction, sign in (("plus", 1), ("minus", -1)):
            d, _, problems = traveler_cycle(cat, label, direction)
            out += problems
            if not problems and (d[1] != 0 or d[0] * sign <= 0):
                out.append(f"{direction} cycle of {label} moves by {d}")
        spec = cat.merge.travelers[label]
        try:
            _step_in_open(frozenset(cat.shape(label).cells), [a.transformed(spec.frame.to_world) for a in spec.turn])
        except StepError as e:
            out.append(f"traveler {label} turn: {e}")
    return out


def exception_problems(cat: Optional[Catalog] = None) -> List[str]:
    """Every exception is a legal joint step of the two systems it is keyed on."""
    cat = cat or load_catalog()
    out = []
    for (a, b), (acts_a, acts_b) in sorted(cat.merge.exceptions.items()):
        w = _open_world(a, b)

        def shift(x: Action) -> Action:
            return x.transformed(lambda p: (p[0] + 18, p[1] + 12))

        try:
            validate_step(w, [shift(x) for x in acts_a], [shift(x) for x in acts_b])
        except StepError as e:
            out.append(f"exception {a} / {b}: {e}")
    return out


def turn_field() -> Field:
    """Field on which every turn, including the corner ones, is taken."""
    return Field(16, 10)


__all__ = [
    "Chain",
    "DISPLACEMENT",
    "TURN_SHIFT",
    "TurnLanding",
    "cycle_displacement",
    "exception_problems",
    "merge_problems",
    "pattern_clashes",
    "pattern_form",
    "rule_problems",
    "rule_world",
    "straight_shapes_disjoint",
    "transform_chain",
    "traveler_cycle",
    "traveler_problems",
    "unrealisable_keys",
    "turn_field",
    "turn_landings",
    "turn_problems",
]
