#!/usr/bin/env python3
"""Baseline 1D experiment: forward solve plus adjoint-gradient check.

Outputs land in runs/baseline_1d (state norms, conservation residual) and
runs/baseline_1d_gradcheck (per-direction finite-difference comparison).
"""

import sys
from pathlib import Path

from tumor_ocp.cli import run

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "baseline_1d.cfg"


def main() -> int:
    rc = run("forward", str(CONFIG))
    if rc != 0:
        return rc
    return run("gradcheck", str(CONFIG), output_dir="runs/baseline_1d_gradcheck")


if __name__ == "__main__":
    sys.exit(main())
