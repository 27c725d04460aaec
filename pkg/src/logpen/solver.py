"""Constrained descent for ground states of the penalized functional.

Each iteration projects the iterate onto the constraint set (rescaling by
the fiber maximizer), takes a gradient descent step with a spectral
(Barzilai-Borwein) step length safeguarded by backtracking on the energy,
and clamps negatives away.  The three operations have complementary roles:
the projection removes the unstable radial direction, the descent step works
on the remaining directions, and the clamp keeps the iterate in the cone
where the nonlinear terms are active.  Clamping never increases the energy
(cutting at zero shrinks every face difference and every mass term); this is
asserted at runtime rather than assumed.

Convergence is declared when the cellwise Euler-Lagrange residual
(max-norm of the gradient per cell volume) falls below the tolerance and
the fiber maximizer of the current iterate is 1 to within nehari_tol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import ProblemContext
from .errors import (
    AllRestartsFailed,
    BracketFailure,
    ConeExit,
    ConeViolation,
    ConfigError,
    LogpenError,
)
from .grid import Grid, ScalarField, boundary_max
from .nehari import project_nehari

__all__ = [
    "SolverConfig",
    "SolveResult",
    "init_bump",
    "solve_ground_state",
    "multi_start",
]

SIGMA_LO = 1e-6
SIGMA_HI = 1e2
CLAMP_SLACK = 1e-11


@dataclass(frozen=True)
class SolverConfig:
    """Descent parameters.

    residual_tol None means the default 1e-8 scaled by the inverse cell
    volume, which keeps the gradient tolerance itself grid-independent.
    """

    max_iters: int = 50000
    residual_tol: float | None = None
    nehari_tol: float = 1e-8
    sigma_init: float | None = None
    backtrack: float = 0.5
    armijo: float = 1e-4
    restarts: int = 4
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if self.residual_tol is not None and not self.residual_tol > 0:
            raise ConfigError("residual_tol must be positive")
        if not self.nehari_tol > 0:
            raise ConfigError("nehari_tol must be positive")
        if not (0 < self.backtrack < 1):
            raise ConfigError("backtrack factor must lie in (0, 1)")
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")

    def resolve_residual_tol(self, grid: Grid) -> float:
        if self.residual_tol is not None:
            return self.residual_tol
        return 1e-8 / grid.cell_volume


@dataclass
class SolveResult:
    """Converged (or abandoned) iterate with its diagnostics."""

    u: ScalarField
    converged: bool
    iters: int
    energy_I: float
    energy_J: float
    residual: float
    t_u_final: float
    positive: bool
    argmax_cell: tuple[int, ...]
    argmax_x: tuple[float, ...]
    sup_outside: float
    boundary_max: float
    seed_index: int = 0
    history: list = field(default_factory=list)


def init_bump(grid: Grid, center, width: float, amplitude: float) -> ScalarField:
    """Gaussian bump amplitude * exp(-|x - center|^2 / (2 width^2))."""
    if not width > 0:
        raise ConfigError(f"bump width must be positive, got {width}")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (grid.dim,):
        raise ConfigError(f"center has shape {c.shape}, grid dim {grid.dim}")
    mesh = grid.center_mesh()
    r2 = sum((m - c[k]) ** 2 for k, m in enumerate(mesh))
    return ScalarField(grid, amplitude * np.exp(-r2 / (2.0 * width * width)))


def _bb_step(s: np.ndarray, y: np.ndarray, fallback: float) -> float:
    sy = float(np.dot(s.ravel(), y.ravel()))
    yy = float(np.dot(y.ravel(), y.ravel()))
    if sy > 0 and yy > 0 and math.isfinite(sy) and math.isfinite(yy):
        return sy / yy
    return fallback


def solve_ground_state(
    ctx: ProblemContext, seed: ScalarField, config: SolverConfig
) -> SolveResult:
    """Run the projected descent from one seed field.

    Raises the cone error when the seed has no positive mass in the region
    and the cone-exit signal when an iterate loses it; both mean the caller
    should try another seed.
    """
    grid = ctx.grid
    h_n = grid.cell_volume
    u = np.maximum(seed.values.astype(float, copy=True), 0.0)
    if not np.any(u[ctx.inside] > 0):
        raise ConeViolation("seed field has no positive mass inside the region")

    rtol = config.resolve_residual_tol(grid)
    sigma = config.sigma_init
    if sigma is None:
        # inverse of the stencil's diagonal scale: stable first step
        sigma = grid.h * grid.h / (4.0 * grid.dim + 1.0)
    sigma = float(np.clip(sigma, SIGMA_LO, SIGMA_HI))

    prev_u = None
    prev_r = None
    history: list[tuple[float, float]] = []
    converged = False
    t_u = math.nan
    res = math.inf
    stalls = 0
    iters = 0

    for iters in range(1, config.max_iters + 1):
        proj = project_nehari(ScalarField(grid, u), ctx)
        t_u = proj.t_u
        u = t_u * u
        g = ctx.grad_I_values(u)
        r = g / h_n
        res = float(np.max(np.abs(r)))
        if res <= rtol and abs(t_u - 1.0) <= config.nehari_tol:
            converged = True
            break

        if prev_u is not None:
            sigma = _bb_step(u - prev_u, r - prev_r, 2.0 * sigma)
        sigma = float(np.clip(sigma, SIGMA_LO, SIGMA_HI))
        prev_u = u
        prev_r = r

        e0 = ctx.energy_I_values(u)
        rr = float(np.sum(r * r)) * h_n
        step = sigma
        accepted = False
        trial = u
        e1 = e0
        for _ in range(60):
            trial = u - step * r
            e1 = ctx.energy_I_values(trial)
            if e1 <= e0 - config.armijo * step * rr:
                accepted = True
                break
            step *= config.backtrack
            if step < 1e-18:
                break
        if not accepted:
            stalls += 1
            if stalls >= 3:
                break  # rounding floor reached; report nonconverged state
            continue
        stalls = 0
        history.append((e0, e1))

        clamped = np.maximum(trial, 0.0)
        if np.any(trial < 0):
            e2 = ctx.energy_I_values(clamped)
            if e2 > e1 + CLAMP_SLACK * (1.0 + abs(e1)):
                raise LogpenError(
                    f"clamping increased the energy ({e1} -> {e2}); "
                    "discrete form violated"
                )
        u = clamped
        if not np.any(u[ctx.inside] > 0):
            raise ConeExit("iterate lost all positive mass inside the region")

    fu = ScalarField(grid, u)
    rep = ctx.report(fu)
    flat_arg = int(np.argmax(u))
    cell = tuple(int(i) for i in np.unravel_index(flat_arg, u.shape))
    x = tuple(float(grid.centers(a)[cell[a]]) for a in range(grid.dim))
    outside = ~ctx.inside
    sup_out = float(np.max(u[outside])) if np.any(outside) else 0.0
    return SolveResult(
        u=fu,
        converged=converged,
        iters=iters,
        energy_I=rep.value_I,
        energy_J=rep.value_J,
        residual=res,
        t_u_final=t_u,
        positive=bool(np.min(u) >= 0.0),
        argmax_cell=cell,
        argmax_x=x,
        sup_outside=sup_out,
        boundary_max=boundary_max(grid, u),
        history=history,
    )


def _default_seeds(ctx: ProblemContext, config: SolverConfig):
    """Deterministic seed list: well-minimum bump first, then randomized."""
    grid = ctx.grid
    pot_vals = ctx.weight - 1.0
    masked = np.where(ctx.inside, pot_vals, np.inf)
    vmin = float(np.min(masked))
    # among (near-)minimizing cells, prefer the one closest to the region
    # center so flat potentials seed centrally; ties fall to lowest index
    lam = ctx.penalty.region
    target = [
        0.5 * (lam.lo[k] + lam.hi[k]) / ctx.eps for k in range(grid.dim)
    ]
    mesh = grid.center_mesh()
    dist2 = sum((m - target[k]) ** 2 for k, m in enumerate(mesh))
    near_min = masked <= vmin + 1e-12 * max(1.0, abs(vmin))
    flat = int(np.argmin(np.where(near_min, dist2, np.inf)))
    cell = np.unravel_index(flat, masked.shape)
    base_center = tuple(float(grid.centers(a)[cell[a]]) for a in range(grid.dim))
    base_amp = math.exp((grid.dim + ctx.penalty.v0) / 2.0)
    seeds = [(base_center, 1.0, base_amp)]
    rng = np.random.default_rng(config.rng_seed)
    for _ in range(config.restarts - 1):
        point = [
            rng.uniform(lam.lo[k], lam.hi[k]) / ctx.eps for k in range(grid.dim)
        ]
        width = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
        amp = base_amp * math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
        seeds.append((tuple(point), width, amp))
    return seeds


def multi_start(ctx: ProblemContext, config: SolverConfig) -> SolveResult:
    """Solve from several deterministic seeds and keep the lowest energy.

    The first seed sits at the grid minimizer of V(eps x) inside the region;
    the rest draw centers, widths and amplitudes from the seeded generator.
    Failed seeds (cone exits, bracket failures, nonconvergence) are skipped;
    if every seed fails, raises with the per-seed reasons.
    """
    best: SolveResult | None = None
    reasons = []
    for idx, (center, width, amp) in enumerate(_default_seeds(ctx, config)):
        try:
            result = solve_ground_state(ctx, init_bump(ctx.grid, center, width, amp), config)
        except (ConeViolation, ConeExit, BracketFailure) as exc:
            reasons.append(f"seed {idx}: {exc}")
            continue
        if not result.converged:
            reasons.append(
                f"seed {idx}: no convergence in {result.iters} iterations "
                f"(residual {result.residual:.3g})"
            )
            continue
        result.seed_index = idx
        if best is None or result.energy_I < best.energy_I:
            best = result
    if best is None:
        raise AllRestartsFailed("; ".join(reasons) or "no seeds were attempted")
    return best
