"""Fiber maps and projection onto the natural constraint set.

For a field u with positive mass inside the rescaled well region, the map
t -> I(t u) rises from 0, peaks once and then falls to -infinity; its unique
critical point t_u rescales u onto the constraint set {I'(u)u = 0}.  Fields
with no positive mass in the region have strictly increasing fibers (the
capped nonlinearity is dominated by the quadratic part there), so the
projection refuses them up front: that refusal is the discrete counterpart
of the fact that every constrained critical point carries mass in the well.

The slope is evaluated in closed form,

    d/dt I(t u) = t ||u||^2 + sum (f1'(t u+) - g2'(eps x, t u+)) u+ h^dim,

which costs no Laplacian apply; projection brackets the sign change
geometrically and bisects to relative width 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import ProblemContext, _g2_prime_values
from .errors import BracketFailure, ConeViolation, ConfigError
from .grid import ScalarField
from .logsplit import f1_prime

__all__ = ["FiberResult", "in_cone", "fiber", "fiber_slope", "project_nehari"]

BISECT_REL_WIDTH = 1e-12
BRACKET_CAP = 1e30
BRACKET_FLOOR = 1e-30


@dataclass(frozen=True)
class FiberResult:
    """Projection outcome: scale factor, bracket and bookkeeping."""

    t_u: float
    slope_residual: float
    bracket: tuple[float, float]
    evaluations: int


def in_cone(u: ScalarField, ctx: ProblemContext) -> bool:
    """True when u has a strictly positive cell inside the rescaled region."""
    return bool(np.any((u.values > 0) & ctx.inside))


class _SlopeKernel:
    """Closed-form fiber slope with per-field precomputation."""

    def __init__(self, ctx: ProblemContext, values: np.ndarray) -> None:
        self.norm2 = ctx.norm_sq(values)
        vp = np.maximum(values, 0.0)
        mask = vp > 0
        self.pos = vp[mask]
        self.inside = ctx.inside[mask]
        self.h_n = ctx.grid.cell_volume
        self.penalty = ctx.penalty
        self.evaluations = 0

    def slope(self, t: float) -> float:
        self.evaluations += 1
        if self.pos.size == 0:
            return t * self.norm2
        s = t * self.pos
        nl = f1_prime(s, self.penalty.split) - _g2_prime_values(
            self.inside, s, self.penalty
        )
        return t * self.norm2 + float(np.sum(nl * self.pos)) * self.h_n


def _require_cone(u: ScalarField, ctx: ProblemContext) -> None:
    if not in_cone(u, ctx):
        raise ConeViolation(
            "field has no positive mass inside the rescaled well region"
        )


def fiber(u: ScalarField, t: float, ctx: ProblemContext) -> float:
    """I(t u) for t >= 0."""
    if t < 0:
        raise ConfigError(f"fiber parameter must be nonnegative, got {t}")
    _require_cone(u, ctx)
    return ctx.energy_I_values(t * u.values)

def fiber_slope(u: ScalarField, t: float, ctx: ProblemContext) -> float:
    """d/dt I(t u), evaluated in closed form (no Laplacian apply)."""
    if t < 0:
        raise ConfigError(f"fiber parameter must be nonnegative, got {t}")
    _require_cone(u, ctx)
    return _SlopeKernel(ctx, u.values).slope(t)


def project_nehari(u: ScalarField, ctx: ProblemContext) -> FiberResult:
    """Find the unique t_u with d/dt I(t u) = 0.

    Brackets the sign change by doubling (or halving) from t = 1, then
    bisects to relative width 1e-12.  Raises the cone error for fields with
    no positive mass in the region; raises bracket-failure if no sign change
    appears before the expansion caps, which for admissible fields does not
    happen (the slope is positive for small t and eventually negative).
    """
    _require_cone(u, ctx)
    kern = _SlopeKernel(ctx, u.values)
    t = 1.0
    s = kern.slope(t)
    if s > 0:
        lo = t
        hi = 2.0 * t
        while kern.slope(hi) > 0:
            lo = hi
            hi *= 2.0
            if hi > BRACKET_CAP:
                raise BracketFailure(
                    f"fiber slope stayed positive up to t={hi:g}; no maximizer found"
                )
    else:
        hi = t
        lo = 0.5 * t
        while kern.slope(lo) <= 0:
            hi = lo
            lo *= 0.5
            if lo < BRACKET_FLOOR:
                raise BracketFailure(
                    f"fiber slope stayed nonpositive down to t={lo:g}"
                )
    while hi - lo > BISECT_REL_WIDTH * hi:
        mid = 0.5 * (lo + hi)
        if kern.slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    t_u = 0.5 * (lo + hi)
    return FiberResult(
        t_u=t_u,
        slope_residual=abs(kern.slope(t_u)),
        bracket=(lo, hi),
        evaluations=kern.evaluations,
    )
