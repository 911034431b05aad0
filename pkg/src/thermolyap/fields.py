"""1D spatial discretization: uniform grids, quadrature, net quantities, I/O.

The quadrature is the midpoint rule on cell centers, summed in ascending
index order so results are bit-deterministic.  Snapshots round-trip through
CSV with shortest round-trip float formatting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import Dual2, StateFields
from .errors import ConfigError, FormatError, ShapeError

__all__ = [
    "Grid1D",
    "StateFields",
    "NetQuantities",
    "integrate",
    "net_quantities",
    "write_snapshot",
    "read_snapshot",
]

SNAPSHOT_HEADER = "x,rho,v,theta"


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on [0, length]."""

    length: float
    n_cells: int

    def __post_init__(self):
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise ConfigError(f"grid length must be positive, got {self.length}")
        if self.n_cells < 4:
            raise ConfigError(f"need at least 4 cells, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx


def integrate(grid: Grid1D, f) -> float:
    """Midpoint-rule integral: sum of f_i * dx in ascending index order."""
    values = np.asarray(f, dtype=float)
    if values.shape != (grid.n_cells,):
        raise ShapeError(
            f"expected {grid.n_cells} cell values, got shape {values.shape}")
    dx = grid.dx
    total = 0.0
    for v in values.tolist():
        total += v * dx
    return total


@dataclass(frozen=True)
class NetQuantities:
    mass: float
    total_energy: float
    entropy: float
    kinetic: float


def net_quantities(grid: Grid1D, w: StateFields, eos) -> NetQuantities:
    """Net mass, total energy, entropy, and kinetic energy of a state.

    The kinetic part is evaluated in the momentum variable, |p|^2/(2 rho)
    with p = rho*v, which agrees pointwise with rho*|v|^2/2.
    """
    _check_grid(grid, w)
    w.require_admissible()
    eos.require_in_domain(w.theta, w.rho)
    th, rd = Dual2.seed_pair(w.theta, w.rho)
    j = eos.psi(th, rd)
    eta = -j.d1
    e = j.val - w.theta * j.d1
    mom = w.rho * w.v
    kinetic = 0.5 * mom * mom / w.rho
    return NetQuantities(
        mass=integrate(grid, w.rho),
        total_energy=integrate(grid, kinetic + w.rho * e),
        entropy=integrate(grid, w.rho * eta),
        kinetic=integrate(grid, kinetic),
    )


def _check_grid(grid: Grid1D, w: StateFields) -> None:
    if w.n != grid.n_cells:
        raise ShapeError(f"state has {w.n} cells, grid has {grid.n_cells}")


def write_snapshot(path, grid: Grid1D, w: StateFields) -> None:
    """Write ``x,rho,v,theta`` rows at full round-trip precision."""
    _check_grid(grid, w)
    w.require_admissible("snapshot state")
    x = grid.centers()
    lines = [SNAPSHOT_HEADER]
    for i in range(grid.n_cells):
        lines.append(f"{float(x[i])!r},{float(w.rho[i])!r},"
                     f"{float(w.v[i])!r},{float(w.theta[i])!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[Grid1D, StateFields]:
    """Read a snapshot, validating positivity and uniform cell spacing.

    Row numbers in error messages are 1-based over the data rows.
    """
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise FormatError(f"cannot read snapshot '{path}': {exc}") from exc
    if not lines or lines[0] != SNAPSHOT_HEADER:
        raise FormatError(f"expected header '{SNAPSHOT_HEADER}'")
    rows = []
    for idx, line in enumerate(lines[1:], start=1):
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"row {idx}: expected 4 fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"row {idx}: non-numeric field") from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(f"row {idx}: non-finite value")
        if vals[1] <= 0.0:
            raise FormatError(f"row {idx}: non-positive density {vals[1]}")
        if vals[3] <= 0.0:
            raise FormatError(f"row {idx}: non-positive temperature {vals[3]}")
        rows.append(vals)
    n = len(rows)
    if n < 4:
        raise FormatError(f"need at least 4 rows, got {n}")
    data = np.asarray(rows)
    x = data[:, 0]
    dx = 2.0 * x[0]
    if dx <= 0.0:
        raise FormatError("row 1: first cell center must be positive")
    tol = 1e-9 * dx
    for idx in range(1, n):
        if abs(x[idx] - x[idx - 1] - dx) > tol:
            raise FormatError(f"row {idx + 1}: non-uniform cell spacing")
    grid = Grid1D(length=dx * n, n_cells=n)
    return grid, StateFields(data[:, 1], data[:, 2], data[:, 3])
