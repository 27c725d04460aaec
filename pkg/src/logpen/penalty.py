"""Penalization of the nonlinearity outside the potential well region.

Outside an open box region the growth of f2' is capped: beyond a threshold
a0 the slope is replaced by the linear function l*s, with l a fixed fraction
of (V0 + 1).  The threshold solves f2'(a0)/a0 = l, which has exactly one
root above the splitting delta because f2'(s)/s is continuous, vanishes at
delta and increases without bound.  Inside the region the nonlinearity is
untouched, so any solution staying below a0 outside the region solves the
original, unpenalized problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, ConfigError, HypothesisViolation
from .logsplit import SplitParams, f2, f2_prime

__all__ = [
    "Region",
    "PenaltyParams",
    "choose_l",
    "solve_a0",
    "build_penalty",
    "f2_tilde_prime",
    "g2_prime",
    "g2",
]

A0_BRACKET_CAP = 1e6
A0_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Region:
    """Open axis-aligned box; membership uses strict inequalities."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi):
            raise ConfigError("region lo/hi dimension mismatch")
        for a, b in zip(self.lo, self.hi):
            if not (a < b):
                raise ConfigError(f"region must have positive extent, got ({a}, {b})")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains_mask(self, coords: tuple[np.ndarray, ...]) -> np.ndarray:
        """Boolean membership for coordinate arrays (one array per axis)."""
        if len(coords) != self.dim:
            raise ConfigError(f"expected {self.dim} coordinate arrays")
        mask = np.ones(np.broadcast(*coords).shape, dtype=bool)
        for k, c in enumerate(coords):
            mask &= (np.asarray(c) > self.lo[k]) & (np.asarray(c) < self.hi[k])
        return mask

    def contains(self, point) -> bool:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.shape != (self.dim,):
            raise ConfigError(f"point has shape {p.shape}, region dim {self.dim}")
        return bool(all(self.lo[k] < p[k] < self.hi[k] for k in range(self.dim)))


def choose_l(v0: float, fraction: float = 0.25) -> float:
    """Penalty slope l = fraction * (V0 + 1).

    The fraction must not exceed 1/2 so that V0 + 1 >= 2 l, which is what
    makes the penalized quadratic part dominate outside the region.
    """
    if not v0 > -1:
        raise HypothesisViolation(f"V0 must exceed -1, got {v0}")
    if not (0 < fraction <= 0.5):
        raise ConfigError(f"l fraction must lie in (0, 1/2], got {fraction}")
    return fraction * (v0 + 1.0)


def solve_a0(split: SplitParams, l: float) -> float:
    """Unique root of f2'(s)/s = l above delta.

    Geometric doubling from delta brackets the root (failing beyond s = 1e6),
    then bisection shrinks the bracket to relative width 1e-12.  Bisection is
    used because the ratio is monotone and flat near delta, where Newton
    steps from a poor start can leave the domain.
    """
    if not (l > 0):
        raise ConfigError(f"penalty slope must be positive, got {l}")

    def ratio(s: float) -> float:
        return f2_prime(s, split) / s

    lo = split.delta
    hi = 2.0 * split.delta
    while ratio(hi) < l:
        lo = hi
        hi *= 2.0
        if hi > A0_BRACKET_CAP:
            raise BracketFailure(
                f"no s <= {A0_BRACKET_CAP:g} with f2'(s)/s >= {l}; delta={split.delta}"
            )
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if ratio(mid) < l:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PenaltyParams:
    """Frozen penalization data: splitting, region, scale and thresholds."""

    split: SplitParams
    region: Region
    eps: float
    v0: float
    l: float
    a0: float

    def __post_init__(self) -> None:
        if not (self.eps > 0):
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not self.v0 > -1:
            raise HypothesisViolation(f"V0 must exceed -1, got {self.v0}")
        if self.v0 + 1.0 < 2.0 * self.l:
            raise ConfigError(
                f"need V0 + 1 >= 2 l, got V0={self.v0}, l={self.l}"
            )
        if not self.a0 > self.split.delta:
            raise ConfigError(f"a0 must exceed delta, got a0={self.a0}")
        resid = abs(f2_prime(self.a0, self.split) / self.a0 - self.l)
        if resid > A0_RESIDUAL_TOL:
            raise ConfigError(f"a0 residual {resid:g} above {A0_RESIDUAL_TOL:g}")


def build_penalty(
    split: SplitParams,
    region: Region,
    eps: float,
    v0: float,
    fraction: float = 0.25,
) -> PenaltyParams:
    """Assemble validated penalty parameters for one problem instance."""
    l = choose_l(v0, fraction)
    a0 = solve_a0(split, l)
    return PenaltyParams(split=split, region=region, eps=eps, v0=v0, l=l, a0=a0)


def _check_nonneg(s) -> np.ndarray:
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise ConfigError("penalized nonlinearity is defined for s >= 0 only")
    return arr


def f2_tilde_prime(s, params: PenaltyParams):
    """Capped slope: f2'(s) up to a0, then the linear continuation l*s."""
    arr = _check_nonneg(s)
    out = np.where(arr >= params.a0, params.l * arr, f2_prime(arr, params.split))
    return float(out) if np.ndim(s) == 0 else out


def g2_prime(x, s, params: PenaltyParams):
    """Position-dependent slope: full f2' inside the region, capped outside.

    x is a physical (unscaled) point; membership in the open region decides
    the branch.  Scalar x with array s broadcasts over s.
    """
    inside = params.region.contains(x)
    if inside:
        arr = _check_nonneg(s)
        out = f2_prime(arr, params.split)
        return float(out) if np.ndim(s) == 0 else out
    return f2_tilde_prime(s, params)


def _g2_outside(s: np.ndarray, params: PenaltyParams) -> np.ndarray:
    sp = params.split
    capped = 0.5 * params.l * (s * s - params.a0 * params.a0) + f2(params.a0, sp)
    return np.where(s >= params.a0, capped, f2(s, sp))


def g2(x, s, params: PenaltyParams):
    """Antiderivative of g2_prime in s, with g2(x, 0) = 0.

    Inside the region this is f2(s); outside it follows f2 up to a0 and
    continues with the quadratic f2(a0) + l (s^2 - a0^2) / 2.
    """
    arr = _check_nonneg(s)
    if params.region.contains(x):
        out = f2(arr, params.split)
    else:
        out = _g2_outside(np.atleast_1d(arr), params)
        out = out.reshape(arr.shape) if arr.ndim else out[0]
    return float(out) if np.ndim(s) == 0 else out