"""A guided tour of the two controllers on small scenarios.

Run from the repository root:

    python3 demos/walkthrough.py            # merge walkthrough, last frames
    python3 demos/walkthrough.py --all      # print every frame
    python3 demos/walkthrough.py --scenario tests/fixtures/scenarios/combined_16x10.json

The script loads a scenario file (the same format ``metamorph simulate``
reads), runs it with the packaged catalog and prints the frames as text,
with each system's shape label and current move under the tick number.
"""

from __future__ import annotations

import argparse
import json
import os

from metamorph.catalog import load_catalog
from metamorph.cli import load_scenario, run_scenario
from metamorph.render import render

HERE = os.path.dirname(os.path.abspath(__file__))
SCENARIOS = os.path.join(HERE, os.pardir, "tests", "fixtures", "scenarios")


def simulate(path: str, catalog):
    with open(path, encoding="utf-8") as fh:
        return run_scenario(load_scenario(json.load(fh), catalog), cat=catalog)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=os.path.join(SCENARIOS, "merge_walkthrough.json"))
    ap.add_argument("--all", action="store_true", help="print every frame, not only the last few")
    ap.add_argument("--tail", type=int, default=4, help="frames to print without --all")
    args = ap.parse_args(argv)

    catalog = load_catalog()
    res = simulate(args.scenario, catalog)
    frames = render(res.trace, "text", catalog)
    shown = frames if args.all else frames[:1] + frames[-args.tail:]
    for i, frame in enumerate(shown):
        if not args.all and i == 1 and len(frames) > args.tail + 1:
            print(f"... {len(frames) - args.tail - 1} frames skipped ...\n")
        print(frame)
    switch = res.trace.result.get("switch_tick")
    print(f"outcome {res.outcome.value} after {res.ticks} ticks"
          + (f", switched to merge at tick {switch}" if switch is not None else ""))
    return 0 if res.solved else 1


if __name__ == "__main__":
    raise SystemExit(main())
