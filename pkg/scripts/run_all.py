#!/usr/bin/env python3
"""Run every bundled experiment config in sequence.

Outputs land under runs/ next to the working directory.  The degree-1 run is
expected to terminate singular (exit 2); everything else should exit 0.
Pass config names to run a subset, e.g. `scripts/run_all.py convergence`.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dhflow.cli import main

HERE = Path(__file__).resolve().parent

EXPERIMENTS = (
    ("identities", "identities.ini", 0),
    ("decoupled_sweep", "decoupled_sweep.ini", 0),
    ("epsilon_sweep", "epsilon_sweep.ini", 0),
    ("convergence", "convergence.ini", 0),
    ("degree1_blowup", "degree1_blowup.ini", 2),
)

COMMANDS = {
    "identities": "identities",
    "decoupled_sweep": "sweep",
    "epsilon_sweep": "sweep",
    "convergence": "run",
    "degree1_blowup": "run",
}


def main_script(argv):
    wanted = set(argv) if argv else None
    failures = 0
    for name, ini, expected in EXPERIMENTS:
        if wanted is not None and name not in wanted:
            continue
        t0 = time.perf_counter()
        rc = main([COMMANDS[name], str(HERE / ini)])
        wall = time.perf_counter() - t0
        status = "ok" if rc == expected else f"UNEXPECTED rc={rc} (wanted {expected})"
        print(f"{name:18s} rc={rc} {wall:6.1f}s  {status}")
        failures += rc != expected
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main_script(sys.argv[1:]))
