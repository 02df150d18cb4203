#!/usr/bin/env python3
"""Vanishing-relaxation experiments: state, adjoint, and control sweeps.

Runs the three alpha-ladder experiments against their alpha = 0 references
and prints the per-column monotonicity status and fitted slopes.  Outputs
land in runs/alpha_sweep_state, runs/alpha_sweep_adjoint, and
runs/alpha_continuation.  The control continuation solves one optimization
problem per ladder entry and takes a few minutes.
"""

import json
import sys
from pathlib import Path

from tumor_ocp.cli import run

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SWEEPS = ("alpha_sweep_state.cfg", "alpha_sweep_adjoint.cfg",
          "alpha_continuation.cfg")


def main() -> int:
    worst = 0
    for name in SWEEPS:
        cfg = CONFIG_DIR / name
        rc = run("alpha-sweep", str(cfg))
        worst = max(worst, rc)
        out_dir = None
        for line in cfg.read_text().splitlines():
            if line.strip().startswith("output_dir"):
                out_dir = line.split("=", 1)[1].strip()
        if out_dir and Path(out_dir, "summary.json").exists():
            summary = json.loads(Path(out_dir, "summary.json").read_text())
            print(f"{name}: status {summary['status']}")
            print(f"{name}: slopes "
                  f"{ {k: round(v, 3) for k, v in summary['slopes'].items()} }")
    return worst


if __name__ == "__main__":
    sys.exit(main())
