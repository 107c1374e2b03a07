"""Rebuild the regression fixtures under tests/fixtures.

Run from the repository root:

    python3 demos/regenerate_fixtures.py

The tests compare fresh searches against these files, so rerun this only
after a deliberate change to the catalog or the controllers.
"""

from __future__ import annotations

import argparse
import json
import os

from metamorph import engine as eng
from metamorph import probes, recovery
from metamorph import verify as vf
from metamorph.catalog import load_catalog
from metamorph.field import Field

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, os.pardir, "tests", "fixtures")


def dump(name: str, data) -> None:
    path = os.path.join(FIXTURES, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print("wrote", os.path.relpath(path))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.parse_args()
    cat = load_catalog()
    os.makedirs(os.path.join(FIXTURES, "traces"), exist_ok=True)
    f = Field(16, 10)

    cases = {}
    for name in sorted(recovery.CASES):
        a = recovery.find_case(name, f, cat)
        res = recovery.run_case(a.start, f, cat)
        cases[name] = {
            "start": sorted(map(list, a.start)),
            "rotation": a.rotation,
            "first_turn": a.turn,
            "ticks": res.ticks,
            "outcome": res.outcome.value,
            "turns": recovery.turns_taken(res, cat),
        }
        res.trace.write(os.path.join(FIXTURES, "traces", f"recovery_{name}.jsonl"))
    dump("recovery_16x10.json", {"field": [16, 10], "catalog": cat.version, "cases": cases})

    amb = probes.rendezvous_ambiguity(f, catalog=cat, samples=50)
    if amb is None:
        raise SystemExit("no range-6 ambiguity found")
    dump("k6_ambiguity.json", probes.ambiguity_to_json(amb))

    spot = probes.merge_blind_spot(catalog=cat)
    if spot is None:
        raise SystemExit("no range-7 blind spot found")
    dump("k7_blind_spot.json", probes.blind_spot_to_json(spot))

    # ordinary runs, kept for replay
    for i, w0 in enumerate(vf.sampled_scenarios(3, 5, ((12, 8), (16, 10)), cat)):
        eng.run_combined(w0, vf.rendezvous_budget(w0.field.w, w0.field.h), catalog=cat).trace.write(
            os.path.join(FIXTURES, "traces", f"combined_{i}.jsonl"))
    a, b = sorted(map(tuple, spot.a)), sorted(map(tuple, spot.b))
    eng.run(vf.merge_world(a, b), eng.MERGE, probes.mg.merged, 500, catalog=cat).trace.write(
        os.path.join(FIXTURES, "traces", "merge_blind_spot.jsonl"))

    bad = vf.corrupted_catalog(cat)
    rep = vf.run_scenarios("corrupted", vf.sampled_scenarios(40, 1, ((16, 10),), bad), catalog=bad)
    if rep.ok:
        raise SystemExit("the corrupted table produced no counterexample")
    w0, _ = rep.examples[0]
    res = eng.run_combined(w0, vf.rendezvous_budget(16, 10), catalog=bad)
    res.trace.write(os.path.join(FIXTURES, "traces", "corrupted_counterexample.jsonl"))
    dump("corrupted.json", {"outcome": res.outcome.value, "detail": res.detail, "failures": dict(rep.failures),
                            "samples": 40, "seed": 1, "field": [16, 10]})


if __name__ == "__main__":
    main()
