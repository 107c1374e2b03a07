"""The packaged catalog: shape labels plus every rule table the controllers use.

The file ``data/catalog.json`` is produced offline by
:func:`metamorph.synthesis.build_catalog` and is the single source of truth
for both controllers and the tests.  Loading it is cheap and cached.

Shape classes come from a brute-force enumeration at import time; the file
only pins the label order and the roles, and :func:`load_catalog` refuses a
file whose shapes disagree with the enumeration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .field import Cells, Coord, GridError, LocalFrame, is_connected
from .kinematics import Action
from .shapes import (
    GREATER,
    LESS,
    TIE,
    Placement,
    ShapeClass,
    canonical_form,
    free_form,
    one_sided_classes,
    placements_of,
    rotational_symmetries,
    view,
)

SCHEMA = 1
View = Tuple[Coord, ...]
RuleKey = Tuple[int, Tuple[int, int, int, int]]


def actions_to_json(actions: Iterable[Action]) -> list:
    return [a.to_json() for a in actions]


def actions_from_json(data: Iterable[Mapping]) -> Tuple[Action, ...]:
    return tuple(Action.from_json(d) for d in data)


def frame_to_json(f: LocalFrame) -> list:
    return [f.origin[0], f.origin[1], f.rotation]


def frame_from_json(d: Sequence[int]) -> LocalFrame:
    return LocalFrame((int(d[0]), int(d[1])), int(d[2]))


# ----------------------------------------------------------- rendezvous


@dataclass(frozen=True)
class RendezvousRule:
    """One keyed situation of the rendezvous controller.

    ``actions`` are written in the shape's canonical frame.  ``frame`` maps
    canonical coordinates to the moving frame of the ongoing move; it is only
    meaningful for the straight moves.
    """

    move: str
    phase: int
    actions: Tuple[Action, ...]
    frame: LocalFrame

    def to_json(self) -> dict:
        return {
            "move": self.move,
            "phase": self.phase,
            "actions": actions_to_json(self.actions),
            "frame": frame_to_json(self.frame),
        }


@dataclass(frozen=True)
class GaitPhase:
    label: int
    cells: Tuple[Coord, ...]
    actions: Tuple[Action, ...]


@dataclass(frozen=True)
class GaitTable:
    """A straight move written in its moving frame, phase 0 first."""

    move: str
    shift: Coord
    phases: Tuple[GaitPhase, ...]


@dataclass(frozen=True)
class TurnContract:
    """Which straight move a turn leaves and enters, and how it lands.

    ``rotation`` is the quarter-turn count from the trigger's moving frame to
    the entered move's frame.  ``shift`` is the offset of the new diagonal
    line (``None`` when the turn changes the axis and no line is kept).
    """

    move: str
    source: str
    target: str
    rotation: int
    shift: Optional[int]


@dataclass
class RendezvousTables:
    cap: int
    tau: int
    tau_corner: int
    wall_gap: int
    rules: Dict[RuleKey, RendezvousRule]
    gaits: Dict[str, GaitTable]
    turns: Dict[str, TurnContract]

    def rule(self, label: int, gaps: Sequence[int]) -> Optional[RendezvousRule]:
        return self.rules.get((label, tuple(gaps)))  # type: ignore[arg-type]


# ----------------------------------------------------------------- merge


@dataclass(frozen=True)
class TravelerSpec:
    """Horizontal movement of one traveler shape, in its moving frame."""

    label: int
    frame: LocalFrame
    plus: Tuple[Action, ...]
    minus: Tuple[Action, ...]
    turn: Tuple[Action, ...]
    turn_rotation: int


@dataclass
class MergeTables:
    increase: Dict[int, Tuple[Action, ...]]
    decrease: Dict[int, Tuple[Action, ...]]
    travelers: Dict[int, TravelerSpec]
    # canonical joint pattern -> actions of its first and second system
    exceptions: Dict[Tuple[Tuple[Coord, ...], Tuple[Coord, ...]], Tuple[Tuple[Action, ...], Tuple[Action, ...]]]
    # alternatives to ``increase``/``decrease``, tried in order when the default would hit a wall
    increase_fallbacks: Dict[int, Tuple[Tuple[Action, ...], ...]] = field(default_factory=dict)
    decrease_fallbacks: Dict[int, Tuple[Tuple[Action, ...], ...]] = field(default_factory=dict)


# --------------------------------------------------------------- catalog


@dataclass
class Catalog:
    version: str
    shapes: List[ShapeClass]
    rendezvous: RendezvousTables
    merge: MergeTables

    def __post_init__(self) -> None:
        self._by_form = {s.cells: s for s in self.shapes}
        self._by_label = {s.label: s for s in self.shapes}
        # decisions cached by the engine; edit the tables before the first run
        self.memo: Dict[tuple, object] = {}

    def shape(self, label: int) -> ShapeClass:
        return self._by_label[label]

    def shape_of(self, cells: Iterable[Coord]) -> ShapeClass:
        form = canonical_form(cells)
        try:
            return self._by_form[form]
        except KeyError:
            raise GridError(f"no catalog shape matches {sorted(cells)}") from None

    def label_of(self, cells: Iterable[Coord]) -> int:
        return self.shape_of(cells).label

    def with_role(self, role: str) -> List[ShapeClass]:
        return [s for s in self.shapes if role in s.roles]

    def placements(self, cells: Iterable[Coord]) -> List[Placement]:
        return placements_of(cells, self._by_form)

    def to_json(self) -> dict:
        rz = self.rendezvous
        mg = self.merge
        return {
            "schema": SCHEMA,
            "version": self.version,
            "shapes": [
                {
                    "label": s.label,
                    "name": s.name,
                    "cells": [list(c) for c in s.cells],
                    "symmetries": list(s.symmetries),
                    "roles": list(s.roles),
                }
                for s in self.shapes
            ],
            "rendezvous": {
                "cap": rz.cap,
                "tau": rz.tau,
                "tau_corner": rz.tau_corner,
                "wall_gap": rz.wall_gap,
                "gaits": {
                    m: {
                        "shift": list(g.shift),
                        "phases": [
                            {"label": p.label, "cells": [list(c) for c in p.cells], "actions": actions_to_json(p.actions)}
                            for p in g.phases
                        ],
                    }
                    for m, g in sorted(rz.gaits.items())
                },
                "turns": {
                    m: {"source": t.source, "target": t.target, "rotation": t.rotation, "shift": t.shift}
                    for m, t in sorted(rz.turns.items())
                },
                "rules": [
                    dict(label=k[0], gaps=list(k[1]), **r.to_json()) for k, r in sorted(rz.rules.items())
                ],
            },
            "merge": {
                "increase": {str(k): actions_to_json(v) for k, v in sorted(mg.increase.items())},
                "decrease": {str(k): actions_to_json(v) for k, v in sorted(mg.decrease.items())},
                "increase_fallbacks": {
                    str(k): [actions_to_json(a) for a in v] for k, v in sorted(mg.increase_fallbacks.items())
                },
                "decrease_fallbacks": {
                    str(k): [actions_to_json(a) for a in v] for k, v in sorted(mg.decrease_fallbacks.items())
                },
                "travelers": {
                    str(k): {
                        "frame": frame_to_json(t.frame),
                        "plus": actions_to_json(t.plus),
                        "minus": actions_to_json(t.minus),
                        "turn": actions_to_json(t.turn),
                        "turn_rotation": t.turn_rotation,
                    }
                    for k, t in sorted(mg.travelers.items())
                },
                "exceptions": [
                    {
                        "pattern": [[list(c) for c in p[0]], [list(c) for c in p[1]]],
                        "actions": [actions_to_json(a[0]), actions_to_json(a[1])],
                    }
                    for p, a in sorted(mg.exceptions.items())
                ],
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Catalog":
        if data.get("schema") != SCHEMA:
            raise GridError(f"unsupported catalog schema {data.get('schema')!r}")
        shapes = [
            ShapeClass(
                label=int(s["label"]),
                name=s["name"],
                cells=tuple(tuple(c) for c in s["cells"]),
                symmetries=tuple(s["symmetries"]),
                roles=tuple(s["roles"]),
            )
            for s in data["shapes"]
        ]
        rz = data["rendezvous"]
        rules = {
            (int(r["label"]), tuple(r["gaps"])): RendezvousRule(
                r["move"], int(r["phase"]), actions_from_json(r["actions"]), frame_from_json(r["frame"])
            )
            for r in rz["rules"]
        }
        gaits = {
            m: GaitTable(
                m,
                tuple(g["shift"]),
                tuple(
                    GaitPhase(int(p["label"]), tuple(tuple(c) for c in p["cells"]), actions_from_json(p["actions"]))
                    for p in g["phases"]
                ),
            )
            for m, g in rz["gaits"].items()
        }
        turns = {
            m: TurnContract(m, t["source"], t["target"], int(t["rotation"]), t["shift"])
            for m, t in rz["turns"].items()
        }
        mg = data["merge"]
        travelers = {
            int(k): TravelerSpec(
                int(k),
                frame_from_json(t["frame"]),
                actions_from_json(t["plus"]),
                actions_from_json(t["minus"]),
                actions_from_json(t["turn"]),
                int(t["turn_rotation"]),
            )
            for k, t in mg["travelers"].items()
        }
        exceptions = {
            (tuple(tuple(c) for c in e["pattern"][0]), tuple(tuple(c) for c in e["pattern"][1])): (
                actions_from_json(e["actions"][0]),
                actions_from_json(e["actions"][1]),
            )
            for e in mg["exceptions"]
        }
        return cls(
            version=data["version"],
            shapes=shapes,
            rendezvous=RendezvousTables(
                int(rz["cap"]), int(rz["tau"]), int(rz["tau_corner"]), int(rz["wall_gap"]), rules, gaits, turns
            ),
            merge=MergeTables(
                {int(k): actions_from_json(v) for k, v in mg["increase"].items()},
                {int(k): actions_from_json(v) for k, v in mg["decrease"].items()},
                travelers,
                exceptions,
                {int(k): tuple(actions_from_json(a) for a in v) for k, v in mg.get("increase_fallbacks", {}).items()},
                {int(k): tuple(actions_from_json(a) for a in v) for k, v in mg.get("decrease_fallbacks", {}).items()},
            ),
        )

    def dumps(self) -> str:
        """Deterministic text form: same catalog, same bytes."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"


def default_path() -> Path:
    return Path(str(resources.files("metamorph") / "data" / "catalog.json"))


def _check_shapes(shapes: Sequence[ShapeClass]) -> None:
    forms = sorted(s.cells for s in shapes)
    if forms != sorted(one_sided_classes(5)):
        raise GridError("catalog shapes do not match the enumerated five-cell classes")
    if sorted(s.label for s in shapes) != list(range(1, len(shapes) + 1)):
        raise GridError("catalog labels must be 1..n")


def read_catalog(path: str | Path) -> Catalog:
    with open(path, encoding="utf-8") as fh:
        cat = Catalog.from_json(json.load(fh))
    _check_shapes(cat.shapes)
    return cat


@lru_cache(maxsize=None)
def load_catalog(path: Optional[str] = None) -> Catalog:
    return read_catalog(path or default_path())


def export_catalog(path: str | Path, catalog: Optional[Catalog] = None) -> None:
    cat = catalog or load_catalog()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cat.dumps())


# ------------------------------------------------------- shape queries


def enumerate_shapes() -> List[ShapeClass]:
    """The 18 classes, labelled and ordered as in the packaged catalog."""
    return sorted(load_catalog().shapes, key=lambda s: s.label)


def symmetric_shapes() -> List[ShapeClass]:
    return [s for s in enumerate_shapes() if s.symmetric]


def reflection_classes(n: int = 5) -> int:
    """Number of classes once mirror images are identified too."""
    return len({free_form(c) for c in one_sided_classes(n)})


def compute_view(frame: LocalFrame, observed_modules: Iterable[Coord]) -> View:
    return view(frame, observed_modules)


def min_view_frame(cells: Iterable[Coord], observed_modules: Optional[Iterable[Coord]] = None) -> Tuple[Placement, View]:
    """The placement of ``cells`` whose view of everything observed is least."""
    cells = frozenset(cells)
    mods = frozenset(observed_modules) | cells if observed_modules is not None else cells
    best = None
    for p in load_catalog().placements(cells):
        v = view(p.frame, mods)
        if best is None or v < best[1]:
            best = (p, v)
    assert best is not None
    return best


def classify(cells: Iterable[Coord], observed_modules: Optional[Iterable[Coord]] = None) -> Placement:
    cells = frozenset(cells)
    if len(cells) != 5:
        raise GridError(f"expected five cells, got {len(cells)}")
    if not is_connected(cells):
        raise GridError(f"cells are not connected: {sorted(cells)}")
    return min_view_frame(cells, observed_modules)[0]


def compare(a: Tuple[int, View], b: Tuple[int, View]) -> int:
    """``LESS``, ``TIE`` or ``GREATER``: label first, then view."""
    if a[0] != b[0]:
        return LESS if a[0] < b[0] else GREATER
    if a[1] != b[1]:
        return LESS if a[1] < b[1] else GREATER
    return TIE


__all__ = [
    "Catalog",
    "GaitPhase",
    "GaitTable",
    "GREATER",
    "LESS",
    "MergeTables",
    "RendezvousRule",
    "RendezvousTables",
    "TIE",
    "TravelerSpec",
    "TurnContract",
    "classify",
    "compare",
    "compute_view",
    "enumerate_shapes",
    "export_catalog",
    "load_catalog",
    "min_view_frame",
    "read_catalog",
    "reflection_classes",
    "rotational_symmetries",
    "symmetric_shapes",
]
