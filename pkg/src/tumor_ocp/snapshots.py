"""Text snapshot format for grid fields.

Self-describing header followed by node values in row-major order, one value
per line with 17 significant digits (exact double round-trip).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import Grid

_MAGIC = "# tumor-ocp field snapshot v1"


def write_field(path, grid: Grid, values: np.ndarray, name: str, time: float) -> None:
    with open(path, "w") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"dim {grid.dim}\n")
        fh.write("cells " + " ".join(str(c) for c in grid.cells) + "\n")
        fh.write("extent " + " ".join(f"{e:.17g}" for e in grid.extents) + "\n")
        fh.write(f"variable {name}\n")
        fh.write(f"time {time:.17g}\n")
        for v in np.asarray(values, dtype=float):
            fh.write(f"{v:.17g}\n")


def read_field(path):
    """Returns (grid, values, name, time)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != _MAGIC:
        raise ConfigError(f"{path}: not a field snapshot")
    header = {}
    idx = 1
    for idx in range(1, 6):
        key, _, rest = lines[idx].partition(" ")
        header[key] = rest
    try:
        dim = int(header["dim"])
        cells = tuple(int(c) for c in header["cells"].split())
        extents = tuple(float(e) for e in header["extent"].split())
        name = header["variable"]
        time = float(header["time"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed snapshot header: {exc}") from exc
    if len(cells) != dim or len(extents) != dim:
        raise ConfigError(f"{path}: header dim does not match axis counts")
    grid = Grid(extents=extents, cells=cells)
    values = np.array([float(v) for v in lines[6:] if v.strip()], dtype=float)
    if values.size != grid.n_nodes:
        raise ConfigError(
            f"{path}: expected {grid.n_nodes} values, found {values.size}")
    return grid, values, name, time
