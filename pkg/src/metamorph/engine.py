"""Synchronous scheduler, traces and replay.

Per tick every module observes the pre-tick world, the controller picks its
action, the joint step of both systems is validated and applied.  A run
stops Solved when the problem predicate holds and nobody moved, on the tick
budget, or on the first step that fails validation.

Two evaluation paths give the same steps.  The module path observes and
decides once per module, which is the model.  The system path asks the
controller once per system (all modules of a system compute the same joint
action set) and computes the read distance analytically; sweeps use it for
speed and the tests check it against the module path.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from . import merge as mg
from . import rendezvous as rv
from .catalog import Catalog, load_catalog
from .field import Cells, Coord, Field, GridError, WorldState, is_connected, observe, rotate
from .kinematics import Action, StepError, apply_step, destination, noop, transform_plan_cells, validate_step

TRACE_SCHEMA = 1


class Outcome(str, enum.Enum):
    SOLVED = "Solved"
    BUDGET = "StepBudgetExceeded"
    VIOLATION = "InvariantViolation"
    UNRECOGNIZED = "Unrecognized"


class InvalidScenario(GridError):
    """The initial world cannot be run (overlap, disconnection, symmetric start...)."""


# -------------------------------------------------------------- modules


@dataclass
class Modules:
    """Module identities: positions plus the fixed rotation of each module's frame."""

    cells: List[List[Coord]]
    rotations: List[List[int]]

    @classmethod
    def initial(cls, w: WorldState, rotations: Optional[Sequence[Sequence[int]]] = None) -> "Modules":
        cells = [sorted(w.r1), sorted(w.r2)]
        if rotations is None:
            # any fixed assignment works; a mix keeps compass-freeness honest
            rotations = [[(3 * i + j) % 4 for j in range(len(c))] for i, c in enumerate(cells)]
        rots = [list(r) for r in rotations]
        if [len(r) for r in rots] != [len(c) for c in cells]:
            raise InvalidScenario("one frame rotation per module is required")
        return cls([list(c) for c in cells], rots)

    def move(self, steps: Sequence[Sequence[Action]]) -> None:
        for i, acts in enumerate(steps):
            dest = {a.mover: a for a in acts}
            self.cells[i] = [destination(dest[c]) if c in dest else c for c in self.cells[i]]


# ----------------------------------------------------------- controllers


@dataclass(frozen=True)
class Controller:
    """A per-module rule with its declared range, plus the per-system shortcut."""

    name: str
    k: int
    decide: Callable[..., Action]
    system: Callable[[Cells, Cells, Field, Catalog], Tuple[Tuple[Action, ...], int]]


def _rendezvous_system(own: Cells, other: Cells, f: Field, cat: Catalog) -> Tuple[Tuple[Action, ...], int]:
    d = _rv_memo(f, own, cat)
    return d.actions, d.reach


def _rv_memo(f: Field, cells: Cells, cat: Catalog) -> rv.SystemDecision:
    memo = cat.memo
    key = (f.w, f.h, cells)
    d = memo.get(key)
    if d is None:
        if len(memo) > 2_000_000:
            memo.clear()
        d = memo[key] = rv.system_decision(cells, f, cat)
    return d  # type: ignore[return-value]


def _merge_system(own: Cells, other: Cells, f: Field, cat: Catalog) -> Tuple[Tuple[Action, ...], int]:
    # every module asks about the same wall cells, each relative to itself
    asked = set()

    def wall(c: Coord) -> bool:
        asked.add(c)
        return not f.inside(c)

    acts = mg.policy(cat).decide(own, other, wall).actions
    reach = mg.system_reach(own, other)
    if asked:
        reach = max(reach, max(max(abs(p[0] - c[0]), abs(p[1] - c[1])) for p in own for c in asked))
    return acts, reach


RENDEZVOUS = Controller("rendezvous", rv.RANGE, rv.decide, _rendezvous_system)
MERGE = Controller("merge", mg.RANGE, mg.decide_merge, _merge_system)


def noop_controller(k: int = 1) -> Controller:
    return Controller("noop", k, lambda o, cat=None: noop((0, 0)), lambda a, b, f, c: ((), 0))


# ----------------------------------------------------------------- trace


def cells_json(cells: Iterable[Coord]) -> list:
    return [list(c) for c in sorted(cells)]


def state_digest(w: WorldState) -> str:
    text = json.dumps([cells_json(w.r1), cells_json(w.r2)], separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class Trace:
    header: dict
    records: List[dict] = dc_field(default_factory=list)
    result: Optional[dict] = None

    def to_jsonl(self) -> str:
        lines = [_dump(self.header)] + [_dump(r) for r in self.records]
        if self.result is not None:
            lines.append(_dump(self.result))
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise GridError("empty trace")
        objs = [json.loads(ln) for ln in lines]
        header = objs[0]
        if header.get("type") != "header":
            raise GridError("trace does not start with a header line")
        records = [o for o in objs[1:] if o.get("type") == "tick"]
        results = [o for o in objs[1:] if o.get("type") == "result"]
        return cls(header, records, results[-1] if results else None)

    @classmethod
    def read(cls, path: str) -> "Trace":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())

    def initial_world(self) -> WorldState:
        f = Field(*self.header["field"])
        return WorldState(f, frozenset(map(tuple, self.header["r1"])), frozenset(map(tuple, self.header["r2"])))


@dataclass
class RunResult:
    outcome: Outcome
    ticks: int
    trace: Trace
    detail: str = ""
    reach: Dict[str, int] = dc_field(default_factory=dict)
    switch_tick: Optional[int] = None
    final: Optional[WorldState] = None

    @property
    def solved(self) -> bool:
        return self.outcome is Outcome.SOLVED


# ------------------------------------------------------------------- run


def check_initial(w: WorldState, symmetric_ok: bool = False, catalog: Optional[Catalog] = None) -> None:
    cat = catalog or load_catalog()
    for name, cells in (("r1", w.r1), ("r2", w.r2)):
        if len(cells) != 5:
            raise InvalidScenario(f"{name} must have five modules, has {len(cells)}")
        if not is_connected(cells):
            raise InvalidScenario(f"{name} is not connected")
        if not symmetric_ok and cat.shape_of(cells).symmetric:
            raise InvalidScenario(f"{name} starts in symmetric shape {cat.shape_of(cells).name}")


def _module_actions(
    w: WorldState, mods: Modules, ctl: Controller, cat: Catalog
) -> Tuple[Tuple[Tuple[Action, ...], Tuple[Action, ...]], int]:
    steps = []
    reach = 0
    for i in range(2):
        acts = []
        for pos, rot in zip(mods.cells[i], mods.rotations[i]):
            o = observe(w, pos, rot, ctl.k)
            local = ctl.decide(o, cat)
            reach = max(reach, o.reach)
            if local.moves:
                acts.append(local.transformed(lambda p: (pos[0] + rotate(p, rot)[0], pos[1] + rotate(p, rot)[1])))
        steps.append(tuple(sorted(acts, key=lambda a: a.mover)))
    return (steps[0], steps[1]), reach


def _system_actions(w: WorldState, ctl: Controller, cat: Catalog) -> Tuple[Tuple[Tuple[Action, ...], Tuple[Action, ...]], int]:
    a1, r1 = ctl.system(w.r1, w.r2, w.field, cat)
    a2, r2 = ctl.system(w.r2, w.r1, w.field, cat)
    return (a1, a2), max(r1, r2)


def run(
    w0: WorldState,
    controller: Controller,
    predicate: Callable[[WorldState], bool],
    budget: int,
    *,
    modules: Optional[Sequence[Sequence[int]]] = None,
    fast: bool = False,
    catalog: Optional[Catalog] = None,
    handover: bool = False,
    record: bool = True,
) -> RunResult:
    """Run one controller.  ``handover`` stops Solved as soon as ``predicate`` holds."""
    return _run(w0, [controller], [predicate], budget, modules=modules, fast=fast, catalog=catalog,
                handover=handover, record=record)


def run_combined(
    w0: WorldState,
    budget: int,
    *,
    modules: Optional[Sequence[Sequence[int]]] = None,
    fast: bool = False,
    catalog: Optional[Catalog] = None,
    record: bool = True,
) -> RunResult:
    """Rendezvous until both systems fit an 8x8 square, then merge (latched) until connected."""
    return _run(w0, [RENDEZVOUS, MERGE], [rv.rendezvous_done, mg.merged], budget, modules=modules,
                fast=fast, catalog=catalog, handover=False, record=record)


def _run(
    w0: WorldState,
    controllers: Sequence[Controller],
    predicates: Sequence[Callable[[WorldState], bool]],
    budget: int,
    *,
    modules: Optional[Sequence[Sequence[int]]],
    fast: bool,
    catalog: Optional[Catalog],
    handover: bool,
    record: bool,
) -> RunResult:
    if budget < 1:
        raise ValueError("budget must be at least 1")
    cat = catalog or load_catalog()
    mods = Modules.initial(w0, modules)
    header = {
        "type": "header",
        "schema": TRACE_SCHEMA,
        "field": [w0.field.w, w0.field.h],
        "controller": "+".join(c.name for c in controllers),
        "k": {c.name: c.k for c in controllers},
        "catalog_version": cat.version,
        "r1": cells_json(w0.r1),
        "r2": cells_json(w0.r2),
        "modules": mods.rotations,
        "evaluation": "system" if fast else "module",
    }
    trace = Trace(header)
    reach: Dict[str, int] = {c.name: 0 for c in controllers}
    stage = 0
    switch_tick = None
    w = w0
    t = 0

    def finish(outcome: Outcome, detail: str = "") -> RunResult:
        trace.result = {"type": "result", "outcome": outcome.value, "ticks": t, "detail": detail,
                        "switch_tick": switch_tick}
        return RunResult(outcome, t, trace, detail, reach, switch_tick, w)

    while True:
        # latched switch: once a later stage's entry predicate holds we never go back
        while stage + 1 < len(controllers) and predicates[stage](w):
            stage += 1
            switch_tick = t
        ctl = controllers[stage]
        if handover and predicates[stage](w):
            return finish(Outcome.SOLVED)
        if t >= budget:
            return finish(Outcome.BUDGET, f"no solution within {budget} ticks")
        try:
            if fast:
                steps, r = _system_actions(w, ctl, cat)
            else:
                steps, r = _module_actions(w, mods, ctl, cat)
        except (rv.Unrecognized, mg.MergeError) as e:
            return finish(Outcome.UNRECOGNIZED, str(e))
        reach[ctl.name] = max(reach[ctl.name], r)
        idle = not steps[0] and not steps[1]
        if idle and predicates[stage](w):
            return finish(Outcome.SOLVED)
        try:
            plan = validate_step(w, steps[0], steps[1])
        except StepError as e:
            return finish(Outcome.VIOLATION, str(e))
        w = apply_step(w, plan)
        mods.move(plan.actions)
        t += 1
        if record:
            trace.records.append(
                {
                    "type": "tick",
                    "tick": t,
                    "controller": ctl.name,
                    "actions": [[a.to_json() for a in steps[0]], [a.to_json() for a in steps[1]]],
                    "r1": cells_json(w.r1),
                    "r2": cells_json(w.r2),
                    "digest": state_digest(w),
                }
            )
        if idle:
            # nobody moved and the goal does not hold: this repeats forever
            return finish(Outcome.BUDGET, "all modules idle before the goal holds")


def replay(trace: Trace, validate: bool = True) -> bool:
    """Re-apply recorded actions from the header state; True iff every recorded state matches."""
    try:
        w = trace.initial_world()
    except (GridError, KeyError, TypeError) as e:
        raise GridError(f"malformed trace header: {e}") from None
    expected = 1
    for rec in trace.records:
        if rec.get("tick") != expected:
            return False
        expected += 1
        steps = [[Action.from_json(a) for a in side] for side in rec["actions"]]
        try:
            if validate:
                plan = validate_step(w, steps[0], steps[1])
                w = apply_step(w, plan)
            else:
                w = WorldState(w.field, transform_plan_cells(w.r1, steps[0]), transform_plan_cells(w.r2, steps[1]))
        except (StepError, GridError):
            return False
        if cells_json(w.r1) != rec["r1"] or cells_json(w.r2) != rec["r2"]:
            return False
        if rec.get("digest") != state_digest(w):
            return False
    return True


def world(field: Tuple[int, int] | Field, r1: Iterable[Coord], r2: Iterable[Coord]) -> WorldState:
    f = field if isinstance(field, Field) else Field(*field)
    return WorldState(f, frozenset(map(tuple, r1)), frozenset(map(tuple, r2)))
