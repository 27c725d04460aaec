"""Potentials, weighted norms and the variational functionals.

Two functionals share one quadratic part, the weighted norm

    ||u||^2 = dirichlet_form(u) + sum (V(eps x) + 1) u^2 h^dim.

The free-problem functional evaluates the logarithmic term through the
splitting (f1 - f2 reconstructs -(1/2) s^2 log s^2 exactly), while the
penalized functional sees only the positive part of the field and applies
the region-capped nonlinearity:

    J(u) = 1/2 ||u||^2 + sum (f1(u) - f2(u)) h^dim
    I(u) = 1/2 ||u||^2 + sum (f1(u+) - g2(eps x, u+)) h^dim

Both are exact discrete functionals; grad_I below is their exact gradient
with respect to cell values, so finite differences of I reproduce it to
rounding.  The Pohozaev-type identity J(u) - 1/2 J'(u)u = 1/2 integral u^2
holds branchwise in closed form and is exposed as identity_gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, HypothesisViolation
from .grid import Grid, ScalarField, dirichlet_form, integrate, laplacian_values
from .logsplit import SplitParams, f1, f1_prime, f2, f2_prime
from .penalty import PenaltyParams, Region

__all__ = [
    "PotentialSpec",
    "EnergyReport",
    "ProblemContext",
    "potential_on_grid",
    "validate_v1",
    "check_v2",
    "norm_eps_sq",
    "energy_J",
    "energy_I",
    "grad_I",
    "identity_gap",
    "energy_report",
]


@dataclass(frozen=True)
class PotentialSpec:
    """External potential V.

    Kinds:
      constant          V(x) = v0
      capped_quadratic  V(x) = v0 + min(|x - center|^2, cap)
      tabulated         values on a rectilinear table, linearly interpolated
                        per axis and clamped to edge values outside

    v0 is the declared global infimum; validate_v1 checks it exceeds -1 and,
    for tables, that the declared value matches the table minimum.
    """

    kind: str
    v0: float
    center: tuple[float, ...] | None = None
    cap: float | None = None
    axes: tuple | None = None
    table: object | None = None

    def evaluate(self, coords: tuple[np.ndarray, ...]) -> np.ndarray:
        """V at points given as one broadcastable array per axis."""
        if self.kind == "constant":
            return np.full(np.broadcast(*coords).shape, self.v0, dtype=float)
        if self.kind == "capped_quadratic":
            r2 = np.zeros(np.broadcast(*coords).shape, dtype=float)
            for k, c in enumerate(coords):
                d = np.asarray(c, dtype=float) - self.center[k]
                r2 = r2 + d * d
            return self.v0 + np.minimum(r2, self.cap)
        if self.kind == "tabulated":
            return self._interp(coords)
        raise ConfigError(f"unknown potential kind {self.kind!r}")

    def _interp(self, coords: tuple[np.ndarray, ...]) -> np.ndarray:
        axes = [np.asarray(a, dtype=float) for a in self.axes]
        table = np.asarray(self.table, dtype=float)
        if len(axes) == 1:
            return np.interp(np.asarray(coords[0], dtype=float), axes[0], table)
        # bilinear with edge clamping
        x = np.clip(np.asarray(coords[0], dtype=float), axes[0][0], axes[0][-1])
        y = np.clip(np.asarray(coords[1], dtype=float), axes[1][0], axes[1][-1])
        x, y = np.broadcast_arrays(x, y)
        i = np.clip(np.searchsorted(axes[0], x) - 1, 0, len(axes[0]) - 2)
        j = np.clip(np.searchsorted(axes[1], y) - 1, 0, len(axes[1]) - 2)
        tx = (x - axes[0][i]) / (axes[0][i + 1] - axes[0][i])
        ty = (y - axes[1][j]) / (axes[1][j + 1] - axes[1][j])
        v00 = table[i, j]
        v10 = table[i + 1, j]
        v01 = table[i, j + 1]
        v11 = table[i + 1, j + 1]
        return (
            v00 * (1 - tx) * (1 - ty)
            + v10 * tx * (1 - ty)
            + v01 * (1 - tx) * ty
            + v11 * tx * ty
        )


def validate_v1(pot: PotentialSpec) -> None:
    """Reject potentials whose declared infimum breaks V0 > -1."""
    if not np.isfinite(pot.v0) or not pot.v0 > -1.0:
        raise HypothesisViolation(f"infimum of V must exceed -1, got {pot.v0}")
    if pot.kind == "capped_quadratic":
        if pot.center is None or pot.cap is None or not pot.cap > 0:
            raise ConfigError("capped_quadratic needs a center and a positive cap")
    if pot.kind == "tabulated":
        table = np.asarray(pot.table, dtype=float)
        tmin = float(np.min(table))
        if abs(tmin - pot.v0) > 1e-9 * max(1.0, abs(pot.v0)):
            raise ConfigError(
                f"declared V0={pot.v0} does not match table minimum {tmin}"
            )


def check_v2(pot: PotentialSpec, region: Region, samples: int = 2048) -> None:
    """Numerical well condition: inf over the region is V0, boundary is higher.

    The region interior is sampled on a lattice fine enough that a locally
    quadratic minimum is resolved; the boundary is traced with a fine 1-D
    sampling per edge.  Raises HypothesisViolation when the declared V0 is
    not attained inside or the boundary minimum does not exceed it.
    """
    dim = region.dim
    n = samples if dim == 1 else max(int(np.sqrt(samples)) * 8, 512)
    axes = []
    for k in range(dim):
        t = (np.arange(1, n + 1)) / (n + 1)
        axes.append(region.lo[k] + (region.hi[k] - region.lo[k]) * t)
    spacing = max((region.hi[k] - region.lo[k]) / (n + 1) for k in range(dim))
    mesh = (axes[0],) if dim == 1 else tuple(np.meshgrid(*axes, indexing="ij"))
    inner_min = float(np.min(pot.evaluate(mesh)))
    scale = max(1.0, abs(pot.v0))
    if inner_min < pot.v0 - 1e-9 * scale:
        raise HypothesisViolation(
            f"potential drops to {inner_min} inside the region, below declared V0={pot.v0}"
        )
    resolve_tol = max(1e-6, 10.0 * dim * (spacing / 2.0) ** 2)
    if inner_min > pot.v0 + resolve_tol:
        raise HypothesisViolation(
            f"declared V0={pot.v0} not attained inside the region (sampled min {inner_min})"
        )
    if dim == 1:
        boundary_pts = [(region.lo[0],), (region.hi[0],)]
        bmin = min(float(pot.evaluate((np.asarray([p[0]]),))[0]) for p in boundary_pts)
    else:
        t = np.linspace(0.0, 1.0, 2049)
        xs = region.lo[0] + (region.hi[0] - region.lo[0]) * t
        ys = region.lo[1] + (region.hi[1] - region.lo[1]) * t
        edges = [
            (xs, np.full_like(xs, region.lo[1])),
            (xs, np.full_like(xs, region.hi[1])),
            (np.full_like(ys, region.lo[0]), ys),
            (np.full_like(ys, region.hi[0]), ys),
        ]
        bmin = min(float(np.min(pot.evaluate(e))) for e in edges)
    if not bmin > pot.v0 + 1e-9 * scale:
        raise HypothesisViolation(
            f"boundary minimum {bmin} does not exceed declared V0={pot.v0}"
        )


def potential_on_grid(pot: PotentialSpec, grid: Grid, eps: float) -> np.ndarray:
    """V(eps x) at every cell center, shaped like a field."""
    mesh = tuple(eps * c for c in grid.center_mesh())
    return pot.evaluate(mesh)


def _weight(grid: Grid, pot: PotentialSpec, eps: float) -> np.ndarray:
    w = potential_on_grid(pot, grid, eps) + 1.0
    if not np.all(w > 0):
        raise HypothesisViolation(
            f"V(eps x) + 1 must be positive on the grid (min {float(np.min(w)) - 1.0:+g} + 1)"
        )
    return w


def _mass_term(grid: Grid, weight: np.ndarray, v: np.ndarray) -> float:
    return float(np.sum(weight * v * v)) * grid.cell_volume


def norm_eps_sq(grid: Grid, pot: PotentialSpec, eps: float, u: ScalarField) -> float:
    """Squared weighted norm: gradient energy plus (V(eps x)+1)-weighted mass."""
    w = _weight(grid, pot, eps)
    return dirichlet_form(grid, u.values) + _mass_term(grid, w, u.values)


def _g2_values(
    inside: np.ndarray, vplus: np.ndarray, penalty: PenaltyParams
) -> np.ndarray:
    sp = penalty.split
    plain = f2(vplus, sp)
    capped = 0.5 * penalty.l * (vplus * vplus - penalty.a0**2) + f2(penalty.a0, sp)
    outside_vals = np.where(vplus >= penalty.a0, capped, plain)
    return np.where(inside, plain, outside_vals)


def _g2_prime_values(
    inside: np.ndarray, vplus: np.ndarray, penalty: PenaltyParams
) -> np.ndarray:
    plain = f2_prime(vplus, penalty.split)
    outside_vals = np.where(vplus >= penalty.a0, penalty.l * vplus, plain)
    return np.where(inside, plain, outside_vals)


def _inside_mask(grid: Grid, region: Region, eps: float) -> np.ndarray:
    mesh = tuple(eps * c for c in grid.center_mesh())
    return region.contains_mask(mesh)


def energy_J(
    grid: Grid, pot: PotentialSpec, eps: float, split: SplitParams, u: ScalarField
) -> float:
    """Free-problem functional; the log term enters through f1 - f2."""
    quad = 0.5 * norm_eps_sq(grid, pot, eps, u)
    v = u.values
    return quad + float(np.sum(f1(v, split) - f2(v, split))) * grid.cell_volume


def energy_I(
    grid: Grid, pot: PotentialSpec, eps: float, penalty: PenaltyParams, u: ScalarField
) -> float:
    """Penalized functional; nonlinear terms act on the positive part only."""
    quad = 0.5 * norm_eps_sq(grid, pot, eps, u)
    vp = np.maximum(u.values, 0.0)
    inside = _inside_mask(grid, penalty.region, eps)
    nl = np.sum(f1(vp, penalty.split) - _g2_values(inside, vp, penalty))
    return quad + float(nl) * grid.cell_volume


def grad_I(
    grid: Grid, pot: PotentialSpec, eps: float, penalty: PenaltyParams, u: ScalarField
) -> ScalarField:
    """Exact gradient of the discrete penalized functional (h^dim-scaled)."""
    w = _weight(grid, pot, eps)
    v = u.values
    vp = np.maximum(v, 0.0)
    inside = _inside_mask(grid, penalty.region, eps)
    g = (
        -laplacian_values(grid, v)
        + w * v
        - _g2_prime_values(inside, vp, penalty)
        + f1_prime(vp, penalty.split)
    ) * grid.cell_volume
    return ScalarField(grid, g)


def identity_gap(
    grid: Grid, pot: PotentialSpec, eps: float, split: SplitParams, u: ScalarField
) -> float:
    """Relative defect of J(u) - 1/2 J'(u)u = 1/2 integral u^2.

    Sign-changing inputs are truncated to their positive part first (the
    identity is applied where the solver uses it).  Returns 0 for the zero
    field; otherwise the defect is normalized by (1/2) integral u^2.
    """
    v = u.values
    if np.any(v < 0):
        v = np.maximum(v, 0.0)
    if not np.any(v):
        return 0.0
    w = _weight(grid, pot, eps)
    quad_sq = dirichlet_form(grid, v) + _mass_term(grid, w, v)
    half_mass = 0.5 * integrate(grid, v * v)
    jval = 0.5 * quad_sq + float(np.sum(f1(v, split) - f2(v, split))) * grid.cell_volume
    slope_nl = float(np.sum((f1_prime(v, split) - f2_prime(v, split)) * v))
    jprime_u = quad_sq + slope_nl * grid.cell_volume
    return abs(jval - 0.5 * jprime_u - half_mass) / half_mass


@dataclass(frozen=True)
class EnergyReport:
    """Diagnostics of one field under one problem setup."""

    value_I: float
    value_J: float
    norm_eps_sq: float
    mass: float
    log_term: float
    identity_gap: float


def energy_report(
    grid: Grid, pot: PotentialSpec, eps: float, penalty: PenaltyParams, u: ScalarField
) -> EnergyReport:
    sp = penalty.split
    v = u.values
    log_term = 2.0 * float(np.sum(f2(v, sp) - f1(v, sp))) * grid.cell_volume
    return EnergyReport(
        value_I=energy_I(grid, pot, eps, penalty, u),
        value_J=energy_J(grid, pot, eps, sp, u),
        norm_eps_sq=norm_eps_sq(grid, pot, eps, u),
        mass=integrate(grid, v * v),
        log_term=log_term,
        identity_gap=identity_gap(grid, pot, eps, sp, u),
    )


class ProblemContext:
    """One solve setup with cached per-grid arrays.

    Bundles grid, potential, scale eps and penalty parameters, and caches
    the weight array V(eps x) + 1 and the region membership mask so the
    inner iteration never re-evaluates the potential.
    """

    def __init__(
        self, grid: Grid, pot: PotentialSpec, eps: float, penalty: PenaltyParams
    ) -> None:
        if abs(penalty.eps - eps) > 0:
            raise ConfigError(
                f"penalty was built for eps={penalty.eps}, context uses eps={eps}"
            )
        self.grid = grid
        self.pot = pot
        self.eps = float(eps)
        self.penalty = penalty

    @cached_property
    def weight(self) -> np.ndarray:
        return _weight(self.grid, self.pot, self.eps)

    @cached_property
    def inside(self) -> np.ndarray:
        return _inside_mask(self.grid, self.penalty.region, self.eps)

    def norm_sq(self, values: np.ndarray) -> float:
        return dirichlet_form(self.grid, values) + _mass_term(
            self.grid, self.weight, values
        )

    def energy_I_values(self, values: np.ndarray) -> float:
        vp = np.maximum(values, 0.0)
        nl = np.sum(
            f1(vp, self.penalty.split) - _g2_values(self.inside, vp, self.penalty)
        )
        return 0.5 * self.norm_sq(values) + float(nl) * self.grid.cell_volume

    def grad_I_values(self, values: np.ndarray) -> np.ndarray:
        vp = np.maximum(values, 0.0)
        return (
            -laplacian_values(self.grid, values)
            + self.weight * values
            - _g2_prime_values(self.inside, vp, self.penalty)
            + f1_prime(vp, self.penalty.split)
        ) * self.grid.cell_volume

    def residual_values(self, values: np.ndarray) -> np.ndarray:
        """Cellwise Euler-Lagrange residual (gradient per cell volume)."""
        return self.grad_I_values(values) / self.grid.cell_volume

    def unpenalized_residual_values(self, values: np.ndarray) -> np.ndarray:
        """Residual of the original equation, log term via the splitting."""
        sp = self.penalty.split
        return (
            -laplacian_values(self.grid, values)
            + self.weight * values
            - f2_prime(values, sp)
            + f1_prime(values, sp)
        )

    def field(self, values: np.ndarray) -> ScalarField:
        return ScalarField(self.grid, values)

    def report(self, u: ScalarField) -> EnergyReport:
        return energy_report(self.grid, self.pot, self.eps, self.penalty, u)
