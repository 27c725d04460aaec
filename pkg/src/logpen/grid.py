"""Uniform tensor grids with cell-centered values and zero exterior data.

The domain is a box [lo, hi]^dim discretized into cells of uniform width h
per axis.  Values live at cell centers lo + (i + 1/2) h.  Everything outside
the box is treated as exactly zero, so the 3-point (1-D) / 5-point (2-D)
Laplacian uses ghost cells holding 0.  Integrals are midpoint sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "Grid",
    "ScalarField",
    "build_grid",
    "laplacian_apply",
    "integrate",
    "dirichlet_form",
    "boundary_max",
]


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered tensor grid on a box.

    Attributes
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    lo, hi : tuple of float
        Box corners per axis.  hi - lo is an exact multiple of h.
    h : float
        Cell width, identical on every axis.
    n_cells : tuple of int
        Cell count per axis.
    adjustment : tuple of float
        How much each requested upper bound was shrunk to reach an exact
        multiple of h (always in [0, h)).
    """

    dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    h: float
    n_cells: tuple[int, ...]
    adjustment: tuple[float, ...] = field(default=(0.0,))

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.n_cells))

    def centers(self, axis: int) -> np.ndarray:
        n = self.n_cells[axis]
        return self.lo[axis] + (np.arange(n) + 0.5) * self.h

    def center_mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays shaped like a field (ij indexing)."""
        axes = [self.centers(k) for k in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass
class ScalarField:
    """Cell-centered scalar values on a grid; zero outside the box."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        expected = tuple(self.grid.n_cells)
        if self.values.shape != expected:
            raise ConfigError(
                f"field shape {self.values.shape} does not match grid cells {expected}"
            )

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def _as_tuple(x, dim: int) -> tuple[float, ...]:
    if np.isscalar(x):
        return (float(x),) * dim
    t = tuple(float(v) for v in x)
    if len(t) != dim:
        raise ConfigError(f"expected {dim} components, got {len(t)}")
    return t


def build_grid(dim: int, lo, hi, h: float, min_cells: int = 8) -> Grid:
    """Construct a grid, shrinking each upper bound to an exact multiple of h.

    The shrink is at most one cell; the amounts are recorded in
    Grid.adjustment so callers can report them.  Rejects dim outside {1, 2},
    non-positive h, and boxes yielding fewer than min_cells cells per axis.
    """
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim}")
    if not (h > 0) or not np.isfinite(h):
        raise ConfigError(f"h must be positive and finite, got {h}")
    lo_t = _as_tuple(lo, dim)
    hi_t = _as_tuple(hi, dim)
    n_cells = []
    new_hi = []
    adjust = []
    for a in range(dim):
        span = hi_t[a] - lo_t[a]
        if span <= 0:
            raise ConfigError(f"axis {a}: hi must exceed lo ({lo_t[a]}, {hi_t[a]})")
        # small relative slack so spans that are exact multiples up to
        # rounding are not shrunk by a full cell
        n = int(np.floor(span / h * (1 + 1e-12)))
        if n < min_cells:
            raise ConfigError(
                f"axis {a}: {n} cells < required minimum {min_cells} (span {span}, h {h})"
            )
        top = lo_t[a] + n * h
        n_cells.append(n)
        new_hi.append(top)
        adjust.append(hi_t[a] - top)
    return Grid(
        dim=dim,
        lo=lo_t,
        hi=tuple(new_hi),
        h=float(h),
        n_cells=tuple(n_cells),
        adjustment=tuple(adjust),
    )


def laplacian_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Discrete Laplacian of a value array with zero ghost cells."""
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    h2 = grid.h * grid.h
    for axis in range(grid.dim):
        padded = np.pad(v, [(1, 1) if a == axis else (0, 0) for a in range(grid.dim)])
        lo_slice = tuple(
            slice(0, -2) if a == axis else slice(None) for a in range(grid.dim)
        )
        hi_slice = tuple(
            slice(2, None) if a == axis else slice(None) for a in range(grid.dim)
        )
        out += (padded[lo_slice] - 2.0 * v + padded[hi_slice]) / h2
    return out


def laplacian_apply(grid: Grid, u: ScalarField) -> ScalarField:
    """Apply the 3/5-point Laplacian stencil (zero exterior values)."""
    if u.grid is not grid and u.grid != grid:
        raise ConfigError("field does not live on the supplied grid")
    return ScalarField(grid, laplacian_values(grid, u.values))


def integrate(grid: Grid, values: np.ndarray) -> float:
    """Midpoint-rule integral: sum of cell values times cell volume."""
    v = np.asarray(values, dtype=float)
    return float(np.sum(v) * grid.cell_volume)


def dirichlet_form(grid: Grid, values: np.ndarray) -> float:
    """Gradient energy sum_faces (du/h)^2 h^dim, ghost zeros at the boundary.

    This is the summation-by-parts pairing of -laplacian with the values:
    integrate(grid, -laplacian * values) agrees with it up to rounding, which
    makes it nonnegative by construction.
    """
    v = np.asarray(values, dtype=float)
    total = 0.0
    for axis in range(grid.dim):
        padded = np.pad(v, [(1, 0) if a == axis else (0, 0) for a in range(grid.dim)])
        d = np.diff(padded, axis=axis)
        total += float(np.sum(d * d))
        # closing face against the ghost zero at the top end
        top = tuple(slice(-1, None) if a == axis else slice(None) for a in range(grid.dim))
        total += float(np.sum(v[top] * v[top]))
    return total * grid.h ** (grid.dim - 2)


def boundary_max(grid: Grid, values: np.ndarray) -> float:
    """Largest |value| over cells touching the box boundary."""
    v = np.abs(np.asarray(values, dtype=float))
    m = 0.0
    for axis in range(grid.dim):
        first = tuple(0 if a == axis else slice(None) for a in range(grid.dim))
        last = tuple(-1 if a == axis else slice(None) for a in range(grid.dim))
        m = max(m, float(np.max(v[first])), float(np.max(v[last])))
    return m
