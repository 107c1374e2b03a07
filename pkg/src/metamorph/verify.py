"""Scenario sweeps for both controllers.

The merge sweep is exhaustive over starts in an 8x8 box with free margin
around it.  The merge rule only looks at walls touching the joint box or
the cell ring around it, so in that open setting it is equivariant under
translation and quarter turns (and the two systems play symmetric parts):
a run depends only on the joint pattern up to those moves.  Merges that
start against a wall are exercised by the rendezvous sweeps instead.  The sweep therefore walks the graph of canonical joint patterns,
remembering the outcome of every pattern it has settled, and reports the
number of ordered placement pairs inside the 8x8 box each pattern stands
for.  Cells visited along every run are tracked too, so the margin a merge
needs around its box is known.

The rendezvous sweeps run the engine: a seeded random sample over the
reference fields, and an exhaustive sweep of one small field against a
fixed far placement of the second system.
"""

from __future__ import annotations

import dataclasses
import json
import random
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import merge as mg
from . import rendezvous as rv
from .catalog import Catalog, load_catalog
from .engine import MERGE, Outcome, RunResult, run, run_combined, world
from .field import Cells, Coord, Field, WorldState, is_connected, rotate, smallest_enclosing_rectangle
from .kinematics import StepError, apply_step, destination, trajectory, validate_step

MERGE_BOX = 8
# free cells kept around the 8x8 box in merge scenarios
MERGE_MARGIN = 4
REFERENCE_FIELDS: Tuple[Tuple[int, int], ...] = ((12, 8), (16, 10), (24, 14), (30, 20))

Pattern = mg.Pattern
Box = Tuple[int, int, int, int]


# ------------------------------------------------------------- placements


def fixed_forms() -> Tuple[Tuple[Coord, ...], ...]:
    from .synthesis import fixed_forms as ff

    return ff()


def _extent(form: Sequence[Coord]) -> Tuple[int, int]:
    return max(x for x, _ in form), max(y for _, y in form)


def merge_pairs(box: int = MERGE_BOX, first: Optional[Sequence[Tuple[Coord, ...]]] = None
                ) -> Iterable[Tuple[Cells, Cells, int]]:
    """Ordered disjoint pairs up to translation whose union fits ``box``.

    Yields ``(a, b, n)`` with the union's box corner at the origin, where
    ``n`` is the number of translations of the pair inside the box.
    ``first`` restricts the shapes of ``a`` (default: all 63 fixed shapes).
    """
    forms = fixed_forms()
    for fa in first if first is not None else forms:
        a = frozenset(fa)
        ax, ay = _extent(fa)
        for fb in forms:
            bx, by = _extent(fb)
            for dx in range(ax - box + 1, box - bx):
                for dy in range(ay - box + 1, box - by):
                    x0, y0 = min(0, dx), min(0, dy)
                    x1, y1 = max(ax, dx + bx), max(ay, dy + by)
                    if x1 - x0 >= box or y1 - y0 >= box:
                        continue
                    b = frozenset((x + dx, y + dy) for x, y in fb)
                    if a & b:
                        continue
                    yield (
                        frozenset((x - x0, y - y0) for x, y in a),
                        frozenset((x - x0, y - y0) for x, y in b),
                        (box - (x1 - x0)) * (box - (y1 - y0)),
                    )


def merge_start_classes(box: int = MERGE_BOX) -> Tuple[List[Pattern], int]:
    """Canonical joint patterns of all ordered pairs in the box, and the pair count.

    Every pair can be turned so that its first system sits in its shape's
    canonical orientation, so only those pairs need canonicalising.
    """
    from .synthesis import CLASSES

    total = sum(n for _, _, n in merge_pairs(box))
    classes = {mg.canonical_pattern(a, b)[0] for a, b, _ in merge_pairs(box, CLASSES)}
    return sorted(classes), total


# ------------------------------------------------------------ merge graph


@dataclass(frozen=True)
class Settled:
    """Outcome of the run from one canonical pattern."""

    status: str
    ticks: int
    reach: int = 0
    box: Box = (0, 0, 0, 0)  # cells touched on the way, in the pattern's coordinates
    detail: str = ""
    at: Optional[Pattern] = None


def _bbox(cells: Iterable[Coord]) -> Box:
    (x0, y0), (x1, y1) = smallest_enclosing_rectangle(cells)
    return x0, y0, x1, y1


def _union(a: Box, b: Box) -> Box:
    return min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3])


def _map_box(b: Box, f) -> Box:
    pts = [f((b[0], b[1])), f((b[2], b[3]))]
    return _bbox(pts)


class MergeGraph:
    """Memoised runs of the merge rule over canonical joint patterns."""

    OFFSET = 16
    FIELD = Field(48, 47)

    def __init__(self, catalog: Optional[Catalog] = None, budget: int = 500):
        self.policy = mg.MergePolicy(catalog or load_catalog())
        self.budget = budget
        self.memo: Dict[Pattern, Settled] = {}

    def joint(self, a: Cells, b: Cells):
        """One synchronous tick: ``(None, tags)`` when both idle, ``('err', reason)`` on a bad step."""
        o = self.OFFSET

        def shift(p: Coord) -> Coord:
            return (p[0] + o, p[1] + o)

        def wall(p: Coord) -> bool:
            return not self.FIELD.inside(shift(p))

        da = self.policy.decide(a, b, wall)
        db = self.policy.decide(b, a, wall)
        if not da.actions and not db.actions:
            return None, (da.tag, db.tag)

        w = WorldState(self.FIELD, frozenset(map(shift, a)), frozenset(map(shift, b)))
        try:
            validate_step(w, [x.transformed(shift) for x in da.actions], [x.transformed(shift) for x in db.actions])
        except StepError as e:
            return "err", f"{da.tag}/{db.tag}: {e}"
        na = _apply(a, da.actions)
        nb = _apply(b, db.actions)
        swept = [c for x in da.actions + db.actions for c in trajectory(x)]
        return (na, nb, swept), (da.tag, db.tag)

    def settle(self, start: Pattern) -> Settled:
        memo = self.memo
        path: List[Tuple[Pattern, Box, int, Optional[Tuple[int, bool, Coord]]]] = []
        on_path: Dict[Pattern, int] = {}
        cur = start
        tail: Optional[Settled] = None
        while True:
            if cur in memo:
                tail = memo[cur]
                break
            if cur in on_path or len(path) > self.budget:
                tail = Settled("loop", 0, at=cur)
                break
            on_path[cur] = len(path)
            a, b = frozenset(cur[0]), frozenset(cur[1])
            reach = mg.system_reach(a, b) if not is_connected(a | b) else 0
            nxt, tags = self.joint(a, b)
            box = _bbox(a | b)
            if nxt is None:
                if is_connected(a | b):
                    path.append((cur, box, 0, None))
                    tail = Settled("ok", 0, 0, box)
                    memo[cur] = tail
                    path.pop()
                else:
                    tail = memo[cur] = Settled("stuck", 0, detail="/".join(tags), at=cur)
                break
            if nxt == "err":
                tail = memo[cur] = Settled("collision", 0, detail=tags, at=cur)
                break
            na, nb, swept = nxt
            box = _union(box, _bbox(list(swept) + list(na | nb)))
            key, r, swapped, off = mg.canonical_pattern(na, nb)
            path.append((cur, box, reach, (r, swapped, off)))
            cur = key
        # unwind: each pattern inherits its successor's result
        for pat, box, reach, tr in reversed(path):
            if tail.status == "ok":
                r, _, off = tr  # type: ignore[misc]
                back = _map_box(tail.box, lambda p, r=r, off=off: rotate((p[0] + off[0], p[1] + off[1]), -r))
                tail = Settled("ok", tail.ticks + 1, max(reach, tail.reach), _union(box, back))
            memo[pat] = tail
        return memo[start] if start in memo else tail


def _apply(cells: Cells, actions) -> Cells:
    movers = {x.mover for x in actions}
    return frozenset((cells - movers) | {destination(x) for x in actions})


@dataclass
class MergeSweepReport:
    classes: int
    ordered_pairs: int
    solved_classes: int
    failures: Counter
    examples: Dict[str, List[Settled]]
    max_ticks: int
    max_reach: int
    excursion: int
    budget: int

    @property
    def ok(self) -> bool:
        return not self.failures and self.max_ticks <= self.budget and self.excursion <= MERGE_MARGIN


def merge_exhaustive(catalog: Optional[Catalog] = None, budget: int = 500,
                     starts: Optional[Tuple[List[Pattern], int]] = None) -> MergeSweepReport:
    classes, total = starts or merge_start_classes()
    graph = MergeGraph(catalog, budget)
    failures: Counter = Counter()
    examples: Dict[str, List[Settled]] = {}
    max_ticks = max_reach = excursion = 0
    solved = 0
    for pat in classes:
        s = graph.settle(pat)
        if s.status != "ok" or s.ticks > budget:
            status = s.status if s.status != "ok" else "budget"
            failures[status] += 1
            examples.setdefault(status, []).append(s)
            continue
        solved += 1
        max_ticks = max(max_ticks, s.ticks)
        max_reach = max(max_reach, s.reach)
        x0, y0, x1, y1 = _bbox(pat[0] + pat[1])
        bx0, by0, bx1, by1 = s.box
        excursion = max(excursion, x0 - bx0, y0 - by0, bx1 - x1, by1 - y1)
    return MergeSweepReport(len(classes), total, solved, failures, examples, max_ticks, max_reach, excursion, budget)


def merge_field() -> Field:
    side = MERGE_BOX + 2 * MERGE_MARGIN
    return Field(side + 1, side)


def merge_world(a: Iterable[Coord], b: Iterable[Coord]) -> WorldState:
    """Place a pair (coordinates inside the 8x8 box) in the middle of the merge field."""
    m = MERGE_MARGIN
    return world(merge_field(), [(x + m, y + m) for x, y in a], [(x + m, y + m) for x, y in b])


# ------------------------------------------------------- rendezvous sweeps


@dataclass
class RendezvousSweepReport:
    name: str
    runs: int = 0
    switched: int = 0
    merged: int = 0
    skipped: int = 0
    max_switch: int = 0
    max_ticks: int = 0
    max_reach: Dict[str, int] = dc_field(default_factory=dict)
    failures: Counter = dc_field(default_factory=Counter)
    examples: List[Tuple[WorldState, RunResult]] = dc_field(default_factory=list)
    budgets: Dict[Tuple[int, int], int] = dc_field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.runs > 0 and not self.failures

    def add(self, w0: WorldState, res: RunResult, budget: int) -> None:
        self.runs += 1
        for k, v in res.reach.items():
            self.max_reach[k] = max(self.max_reach.get(k, 0), v)
        if res.switch_tick is not None:
            self.switched += 1
            self.max_switch = max(self.max_switch, res.switch_tick)
            if res.switch_tick > budget:
                self.failures["switch over budget"] += 1
        if res.solved:
            self.merged += 1
            self.max_ticks = max(self.max_ticks, res.ticks)
        else:
            self.failures[res.outcome.value] += 1
            if len(self.examples) < 5:
                self.examples.append((w0, res))


def rendezvous_budget(w: int, h: int) -> int:
    return 200 * w * h


def random_pair(f: Field, rng: random.Random, catalog: Optional[Catalog] = None) -> WorldState:
    """Two disjoint non-symmetric placements at least one cell apart, chosen uniformly by rejection."""
    cat = catalog or load_catalog()
    forms = [ff for ff in fixed_forms() if not cat.shape_of(ff).symmetric]
    while True:
        cells = []
        for _ in range(2):
            ff = rng.choice(forms)
            ex, ey = _extent(ff)
            dx = rng.randrange(f.w - ex)
            dy = rng.randrange(f.h - ey)
            cells.append(frozenset((x + dx, y + dy) for x, y in ff))
        a, b = cells
        if a & b or not _apart(a, b):
            continue
        return WorldState(f, a, b)


def _apart(a: Cells, b: Cells) -> bool:
    """No cell of ``a`` side-adjacent to a cell of ``b`` (distinct systems at the start)."""
    return not any((x + dx, y + dy) in b for x, y in a for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)))


def sampled_scenarios(n: int, seed: int, fields: Sequence[Tuple[int, int]] = REFERENCE_FIELDS,
                      catalog: Optional[Catalog] = None) -> List[WorldState]:
    rng = random.Random(seed)
    out = []
    for w, h in fields:
        f = Field(w, h)
        out.extend(random_pair(f, rng, catalog) for _ in range(n))
    return out


def _run_one(args) -> Tuple[int, RunResult]:
    i, w0, fast, catalog_path = args
    from .catalog import read_catalog

    cat = read_catalog(catalog_path) if catalog_path else load_catalog()
    res = run_combined(w0, rendezvous_budget(w0.field.w, w0.field.h), fast=fast, catalog=cat, record=False)
    res.trace.records.clear()
    return i, res


def run_scenarios(name: str, scenarios: Sequence[WorldState], *, fast: bool = True, catalog: Optional[Catalog] = None,
                  catalog_path: Optional[str] = None, workers: int = 1) -> RendezvousSweepReport:
    """Run every scenario with the combined controller; the report is independent of ``workers``."""
    rep = RendezvousSweepReport(name)
    for w0 in scenarios:
        rep.budgets[(w0.field.w, w0.field.h)] = rendezvous_budget(w0.field.w, w0.field.h)
    if workers > 1:
        if catalog is not None and catalog_path is None:
            raise ValueError("parallel sweeps load the catalog from a path")
        from concurrent.futures import ProcessPoolExecutor

        jobs = [(i, w0, fast, catalog_path) for i, w0 in enumerate(scenarios)]
        with ProcessPoolExecutor(workers) as ex:
            results = dict(ex.map(_run_one, jobs, chunksize=64))
        ordered = [results[i] for i in range(len(scenarios))]
    else:
        cat = catalog or load_catalog()
        ordered = [
            run_combined(w0, rendezvous_budget(w0.field.w, w0.field.h), fast=fast, catalog=cat, record=False)
            for w0 in scenarios
        ]
    for w0, res in zip(scenarios, ordered):
        rep.add(w0, res, rendezvous_budget(w0.field.w, w0.field.h))
    return rep


def rendezvous_sampled(n: int, seed: int, fields: Sequence[Tuple[int, int]] = REFERENCE_FIELDS,
                       catalog: Optional[Catalog] = None, fast: bool = True, workers: int = 1,
                       catalog_path: Optional[str] = None) -> RendezvousSweepReport:
    scen = sampled_scenarios(n, seed, fields, catalog)
    return run_scenarios("rendezvous-sampled", scen, fast=fast, catalog=catalog, catalog_path=catalog_path,
                         workers=workers)


def far_placement(f: Field, catalog: Optional[Catalog] = None) -> Cells:
    """The fixed second system for the small exhaustive sweep: the first
    non-symmetric shape in label order, canonical orientation, in the northeast corner."""
    cat = catalog or load_catalog()
    shape = next(s for s in sorted(cat.shapes, key=lambda s: s.label) if not s.symmetric)
    ex, ey = _extent(shape.cells)
    return frozenset((x + f.w - 1 - ex, y + f.h - 1 - ey) for x, y in shape.cells)


def small_scenarios(w: int = 12, h: int = 8, catalog: Optional[Catalog] = None) -> Tuple[List[WorldState], int]:
    """Every orientation and translation of every non-symmetric shape against the far system,
    plus the number of placements skipped because they touch or overlap it."""
    cat = catalog or load_catalog()
    f = Field(w, h)
    other = far_placement(f, cat)
    out = []
    skipped = 0
    for ff in fixed_forms():
        if cat.shape_of(ff).symmetric:
            continue
        ex, ey = _extent(ff)
        for dx in range(w - ex):
            for dy in range(h - ey):
                a = frozenset((x + dx, y + dy) for x, y in ff)
                if a & other or not _apart(a, other):
                    skipped += 1
                    continue
                out.append(WorldState(f, a, other))
    return out, skipped


def rendezvous_exhaustive_small(w: int = 12, h: int = 8, catalog: Optional[Catalog] = None, fast: bool = True,
                                workers: int = 1, catalog_path: Optional[str] = None) -> RendezvousSweepReport:
    scen, skipped = small_scenarios(w, h, catalog)
    rep = run_scenarios("rendezvous-exhaustive-small", scen, fast=fast, catalog=catalog,
                        catalog_path=catalog_path, workers=workers)
    rep.skipped = skipped
    return rep


def corrupted_catalog(catalog: Optional[Catalog] = None, label: int = 1, move: str = "M_UR") -> Catalog:
    """A copy of the catalog whose first slide in every ``move`` rule of shape ``label`` runs backwards.

    Used to check that the sweeps really catch a broken table.
    """
    cat = catalog or load_catalog()
    bad = Catalog.from_json(json.loads(cat.dumps()))
    for key, rule in list(bad.rendezvous.rules.items()):
        if key[0] != label or rule.move != move or not rule.actions or rule.actions[0].direction is None:
            continue
        a = rule.actions[0]
        flipped = dataclasses.replace(a, direction=(-a.direction[0], -a.direction[1]))
        bad.rendezvous.rules[key] = dataclasses.replace(rule, actions=(flipped,) + rule.actions[1:])
    return bad
