#!/usr/bin/env python3
"""Inverse-crime optimization: recover a known generating control.

Targets are produced by a forward run with u = 0.4 cos(pi x); the optimizer
starts from u = 0 and must certify stationarity (variational inequality plus
clamp fixed point).  Outputs land in runs/inverse_crime.
"""

import sys
from pathlib import Path

from tumor_ocp.cli import run

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "inverse_crime.cfg"


def main() -> int:
    return run("optimize", str(CONFIG))


if __name__ == "__main__":
    sys.exit(main())
