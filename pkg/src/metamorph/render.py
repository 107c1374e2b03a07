"""Text and SVG frames of a trace: one frame for the initial state plus one per tick.

Walls are drawn around the field, system 1 as ``A``/blue, system 2 as
``B``/orange.  Each frame carries the tick number and, when the state is
recognisable, the ongoing rendezvous move and phase or the merge tag of
each system.  Output depends on the trace alone, so equal traces render to
equal bytes.
"""

from __future__ import annotations

import os
from typing import List, Optional, Sequence, Tuple

from . import merge as mg
from . import rendezvous as rv
from .catalog import Catalog, load_catalog
from .engine import Trace
from .field import Cells, Field, GridError, WorldState

CELL = 16
COLOURS = {"wall": "#444444", "empty": "#ffffff", "a": "#3b6fb6", "b": "#e08a2c", "grid": "#dddddd"}


def states(trace: Trace) -> List[Tuple[int, str, WorldState]]:
    """(tick, controller, state) for the header state and every record."""
    try:
        w = trace.initial_world()
    except (KeyError, TypeError, GridError) as e:
        raise GridError(f"malformed trace: {e}") from None
    first = trace.header.get("controller", "").split("+")[0]
    out = [(0, first, w)]
    for rec in trace.records:
        try:
            cells = (frozenset(map(tuple, rec["r1"])), frozenset(map(tuple, rec["r2"])))
            out.append((int(rec["tick"]), rec.get("controller", ""), WorldState(w.field, *cells)))
        except (KeyError, TypeError, ValueError) as e:
            raise GridError(f"malformed trace record: {e}") from None
    return out


def annotate(w: WorldState, controller: str, catalog: Optional[Catalog] = None) -> str:
    """Short description of what each system is doing, or '' when unknown."""
    cat = catalog or load_catalog()
    parts = []
    for name, own, other in (("A", w.r1, w.r2), ("B", w.r2, w.r1)):
        try:
            if controller == "merge":
                tag = mg.policy(cat).decide(own, other, lambda c: not w.field.inside(c)).tag
            else:
                move, phase, _ = rv.moving_frame(own, w.field, cat)
                tag = f"{move}/{phase}"
        except GridError:
            tag = "?"
        parts.append(f"{name}:{tag}")
    return " ".join(parts)


def text_frame(w: WorldState, tick: int, note: str = "") -> str:
    f = w.field
    lines = [f"tick {tick}" + (f"  {note}" if note else "")]
    lines.append("#" * (f.w + 2))
    for y in range(f.h - 1, -1, -1):
        row = []
        for x in range(f.w):
            c = (x, y)
            row.append("A" if c in w.r1 else "B" if c in w.r2 else ".")
        lines.append("#" + "".join(row) + "#")
    lines.append("#" * (f.w + 2))
    return "\n".join(lines) + "\n"


def svg_frame(w: WorldState, tick: int, note: str = "") -> str:
    f = w.field
    W = (f.w + 2) * CELL
    H = (f.h + 2) * CELL + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="20" width="{W}" height="{H - 20}" fill="{COLOURS["wall"]}"/>',
        f'<text x="2" y="14" font-family="monospace" font-size="12">tick {tick} {_escape(note)}</text>',
    ]
    for y in range(f.h):
        for x in range(f.w):
            c = (x, y)
            fill = COLOURS["a"] if c in w.r1 else COLOURS["b"] if c in w.r2 else COLOURS["empty"]
            px = (x + 1) * CELL
            py = 20 + (f.h - y) * CELL
            out.append(
                f'<rect x="{px}" y="{py}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="{COLOURS["grid"]}"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render(trace: Trace, fmt: str = "text", catalog: Optional[Catalog] = None, notes: bool = True) -> List[str]:
    if fmt not in ("text", "svg"):
        raise ValueError(f"unknown format {fmt!r}")
    draw = text_frame if fmt == "text" else svg_frame
    frames = []
    for tick, ctl, w in states(trace):
        note = annotate(w, ctl, catalog) if notes else ""
        frames.append(draw(w, tick, note))
    return frames


def write_frames(frames: Sequence[str], out_dir: str, fmt: str) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    ext = "txt" if fmt == "text" else "svg"
    paths = []
    for i, fr in enumerate(frames):
        p = os.path.join(out_dir, f"frame_{i:05d}.{ext}")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(fr)
        paths.append(p)
    return paths
