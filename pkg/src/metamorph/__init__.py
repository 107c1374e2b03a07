"""Rendezvous and merge of two five-module metamorphic robotic systems on a walled grid.

Modules are anonymous, oblivious and synchronous; each sees a square window
around itself in its own rotated frame.  The package holds the grid model,
the movement rules, the shape catalog with the frozen rule tables, both
controllers, a synchronous engine with replayable traces, the verification
sweeps and a command line.
"""

from .catalog import Catalog, load_catalog
from .engine import MERGE, RENDEZVOUS, Outcome, RunResult, Trace, replay, run, run_combined, world
from .field import Field, GridError, LocalFrame, WorldState, is_connected, make_field, observe, side_adjacent
from .kinematics import Action, StepError, apply_step, noop, rotation, slide, validate_step

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Catalog",
    "Field",
    "GridError",
    "LocalFrame",
    "MERGE",
    "Outcome",
    "RENDEZVOUS",
    "RunResult",
    "StepError",
    "Trace",
    "WorldState",
    "apply_step",
    "is_connected",
    "load_catalog",
    "make_field",
    "noop",
    "observe",
    "replay",
    "rotation",
    "run",
    "run_combined",
    "side_adjacent",
    "slide",
    "validate_step",
    "world",
]
