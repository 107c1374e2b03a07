"""Command line: ``simulate``, ``verify``, ``render`` and ``catalog``.

Exit codes of ``simulate``: 0 solved, 2 invalid scenario, 3 invariant
violation or unrecognised state, 4 tick budget exceeded.  ``verify`` exits
0 when the sweep has no counterexample and 1 otherwise; the report says why.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import List, Optional, Sequence

from . import engine as eng
from . import merge as mg
from . import rendezvous as rv
from . import verify as vf
from .catalog import Catalog, default_path, export_catalog, load_catalog, read_catalog
from .field import Field, GridError, LocalFrame, WorldState
from .render import render, write_frames
from .shapes import embed

SCENARIO_SCHEMA = 1
EXIT = {
    eng.Outcome.SOLVED: 0,
    eng.Outcome.VIOLATION: 3,
    eng.Outcome.UNRECOGNIZED: 3,
    eng.Outcome.BUDGET: 4,
}
EXIT_INVALID = 2


# ------------------------------------------------------------- scenarios


def _placement(spec, cat: Catalog):
    if "cells" in spec:
        return frozenset(tuple(c) for c in spec["cells"])
    shape = cat.shape(int(spec["label"]))
    ox, oy, r = spec.get("frame", [0, 0, 0])
    return embed(shape, LocalFrame((int(ox), int(oy)), int(r) % 4))


def load_scenario(data: dict, cat: Optional[Catalog] = None) -> dict:
    """Validate a scenario dictionary; raises :class:`GridError` on anything unusable."""
    cat = cat or load_catalog()
    if data.get("schema", SCENARIO_SCHEMA) != SCENARIO_SCHEMA:
        raise GridError(f"unsupported scenario schema {data.get('schema')!r}")
    try:
        w, h = (int(v) for v in data["field"])
        f = Field(w, h)
        r1 = _placement(data["r1"], cat)
        r2 = _placement(data["r2"], cat)
    except (KeyError, TypeError, ValueError) as e:
        raise GridError(f"bad scenario: {e}") from None
    w0 = WorldState(f, r1, r2)
    controller = data.get("controller", "combined")
    if controller not in ("combined", "rendezvous", "merge"):
        raise GridError(f"unknown controller {controller!r}")
    eng.check_initial(w0, symmetric_ok=controller == "merge", catalog=cat)
    if controller != "merge" and not vf._apart(r1, r2):
        raise GridError("the two systems touch at the start")
    budget = int(data.get("budget", vf.rendezvous_budget(w, h) if controller != "merge" else 500))
    return {"world": w0, "controller": controller, "budget": budget, "modules": data.get("modules")}


def run_scenario(sc: dict, fast: bool = False, cat: Optional[Catalog] = None) -> eng.RunResult:
    w0, budget, mods = sc["world"], sc["budget"], sc["modules"]
    if sc["controller"] == "combined":
        return eng.run_combined(w0, budget, modules=mods, fast=fast, catalog=cat)
    if sc["controller"] == "merge":
        return eng.run(w0, eng.MERGE, mg.merged, budget, modules=mods, fast=fast, catalog=cat)
    return eng.run(w0, eng.RENDEZVOUS, rv.rendezvous_done, budget, modules=mods, fast=fast, catalog=cat, handover=True)


# -------------------------------------------------------------- commands


def _catalog(args) -> Catalog:
    return read_catalog(args.catalog) if getattr(args, "catalog", None) else load_catalog()


def cmd_simulate(args) -> int:
    cat = _catalog(args)
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            sc = load_scenario(json.load(fh), cat)
    except (OSError, ValueError, GridError) as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_INVALID
    res = run_scenario(sc, fast=args.evaluation == "system", cat=cat)
    if args.trace:
        res.trace.write(args.trace)
    line = f"{res.outcome.value} after {res.ticks} ticks"
    if res.switch_tick is not None:
        line += f" (switched to merge at tick {res.switch_tick})"
    if res.detail:
        line += f": {res.detail}"
    print(line)
    return EXIT[res.outcome]


def _field_arg(text: str):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"field must look like 16x10, got {text!r}") from None
    return w, h


def _write_trace(trace_dir: Optional[str], name: str, trace: eng.Trace) -> Optional[str]:
    if not trace_dir:
        return None
    os.makedirs(trace_dir, exist_ok=True)
    p = os.path.join(trace_dir, name)
    trace.write(p)
    return p


def cmd_verify(args) -> int:
    cat = _catalog(args)
    t0 = time.time()
    counter: List[dict] = []
    if args.mode == "merge-exhaustive":
        rep = vf.merge_exhaustive(cat, budget=args.budget or 500)
        for status, items in sorted(rep.examples.items()):
            for i, s in enumerate(items[: args.max_examples]):
                a, b = s.at or ((), ())
                entry = {"status": status, "pattern": [list(map(list, a)), list(map(list, b))], "detail": s.detail}
                try:
                    w0 = vf.merge_world(a, b)
                    res = eng.run(w0, eng.MERGE, mg.merged, rep.budget, catalog=cat)
                    entry["trace"] = _write_trace(args.traces, f"merge_{status}_{i}.jsonl", res.trace)
                except GridError as e:
                    entry["trace_error"] = str(e)
                counter.append(entry)
        report = {
            "mode": args.mode,
            "classes": rep.classes,
            "ordered_pairs": rep.ordered_pairs,
            "totals": {"Solved": rep.solved_classes, **dict(rep.failures)},
            "max_ticks": rep.max_ticks,
            "max_reach": rep.max_reach,
            "excursion": rep.excursion,
            "budget": rep.budget,
        }
        ok = rep.ok
    else:
        if args.mode == "rendezvous-sampled":
            fields = [args.field] if args.field else list(vf.REFERENCE_FIELDS)
            scen = vf.sampled_scenarios(args.samples, args.seed, fields, cat)
            skipped = 0
        else:
            w, h = args.field or (12, 8)
            scen, skipped = vf.small_scenarios(w, h, cat)
        rep = vf.run_scenarios(args.mode, scen, fast=True, catalog=cat, catalog_path=args.catalog or str(default_path()),
                               workers=args.workers)
        rep.skipped = skipped
        for i, (w0, res) in enumerate(rep.examples[: args.max_examples]):
            full = eng.run_combined(w0, vf.rendezvous_budget(w0.field.w, w0.field.h), catalog=cat, fast=True)
            counter.append(
                {
                    "outcome": res.outcome.value,
                    "detail": res.detail,
                    "field": [w0.field.w, w0.field.h],
                    "r1": eng.cells_json(w0.r1),
                    "r2": eng.cells_json(w0.r2),
                    "trace": _write_trace(args.traces, f"rendezvous_{i}.jsonl", full.trace),
                }
            )
        totals = {"Solved": rep.merged, **dict(rep.failures)}
        report = {
            "mode": args.mode,
            "scenarios": rep.runs,
            "skipped": rep.skipped,
            "totals": totals,
            "switched": rep.switched,
            "max_switch_tick": rep.max_switch,
            "max_ticks": rep.max_ticks,
            "max_reach": rep.max_reach,
            "budgets": {f"{w}x{h}": b for (w, h), b in sorted(rep.budgets.items())},
        }
        ok = rep.ok
    report["counterexamples"] = counter
    report["ok"] = ok
    report["seconds"] = round(time.time() - t0, 1)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if ok else 1


def cmd_render(args) -> int:
    try:
        trace = eng.Trace.read(args.trace)
        frames = render(trace, args.format, _catalog(args), notes=not args.no_notes)
    except (OSError, ValueError, GridError) as e:
        print(f"cannot render: {e}", file=sys.stderr)
        return EXIT_INVALID
    paths = write_frames(frames, args.out, args.format)
    print(f"{len(paths)} frames written to {args.out}")
    return 0


def cmd_catalog(args) -> int:
    if args.rebuild:
        from .synthesis import build_catalog

        cat = build_catalog(args.out)
    else:
        cat = _catalog(args)
        export_catalog(args.out, cat)
    print(f"catalog {cat.version}: {len(cat.shapes)} shapes, {len(cat.rendezvous.rules)} rendezvous rules, "
          f"{len(cat.merge.exceptions)} merge exceptions -> {args.out}")
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metamorph", description="Rendezvous and merge of two five-module systems.")
    p.add_argument("--catalog", help="catalog JSON to use instead of the packaged one")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--trace", help="write the JSON Lines trace here")
    s.add_argument("--evaluation", choices=("module", "system"), default="module",
                   help="decide per module (default) or once per system")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run a verification sweep")
    v.add_argument("--mode", required=True, choices=("merge-exhaustive", "rendezvous-sampled", "rendezvous-exhaustive-small"))
    v.add_argument("--field", type=_field_arg, help="WxH (sampled: one field instead of the reference set)")
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--budget", type=int, help="merge tick budget (default 500)")
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--report")
    v.add_argument("--traces", help="directory for counterexample traces")
    v.add_argument("--max-examples", type=int, default=5)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("render", help="draw a trace as text or SVG frames")
    r.add_argument("--trace", required=True)
    r.add_argument("--format", choices=("text", "svg"), default="text")
    r.add_argument("--out", required=True)
    r.add_argument("--no-notes", action="store_true", help="omit move annotations")
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("catalog", help="write the shape and rule catalog")
    c.add_argument("--out", required=True)
    c.add_argument("--rebuild", action="store_true", help="rerun the table search instead of copying")
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
