"""C1 splitting of the logarithmic nonlinearity.

The singular term (1/2) s^2 log s^2 is written as f2(s) - f1(s) where f1 is
nonnegative, even and convex (for delta below a hard bound) and f2 vanishes
identically on [-delta, delta] and grows polynomially.  Both pieces and their
derivatives are evaluated branchwise in closed form; near s = 0 only f1 is
active, which keeps every formula finite without clipping.

Branches (s >= 0; both functions are even, derivatives odd):

    f1(s) = -1/2 s^2 log s^2                          0 < s < delta
            -1/2 s^2 (log delta^2 + 3) + 2 delta s - 1/2 delta^2   s >= delta
    f2(s) = 0                                          s <= delta
            1/2 s^2 log(s^2/delta^2) - 3/2 s^2 + 2 delta s - 1/2 delta^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "SplitParams",
    "delta_convexity_bound",
    "f1",
    "f1_prime",
    "f2",
    "f2_prime",
]


def delta_convexity_bound() -> float:
    """Largest delta keeping f1 convex: exp(-3/2).

    The second derivative of the inner branch is -log s^2 - 3, which stays
    nonnegative exactly for |s| <= exp(-3/2).
    """
    return math.exp(-1.5)


@dataclass(frozen=True)
class SplitParams:
    """Splitting threshold delta, fixed per problem (default 0.1).

    p_diag is the exponent used by the polynomial-growth diagnostic
    (sup of |f2'(s)| / s^(p_diag - 1)); it never enters the solve.
    """

    delta: float = 0.1
    p_diag: float = 4.0

    def __post_init__(self) -> None:
        if not (0 < self.delta <= delta_convexity_bound()):
            raise ConfigError(
                f"delta must lie in (0, {delta_convexity_bound():.6f}] to keep "
                f"the convex part convex, got {self.delta}"
            )
        if not self.p_diag > 2:
            raise ConfigError(f"p_diag must exceed 2, got {self.p_diag}")


def _eval(s, inner, outer, params: SplitParams, at_zero: float = 0.0):
    """Branchwise evaluation that never feeds 0 into a logarithm."""
    arr = np.asarray(s, dtype=float)
    scalar = arr.ndim == 0
    a = np.abs(np.atleast_1d(arr))
    out = np.full(a.shape, at_zero)
    d = params.delta
    m_in = (a > 0) & (a < d)
    m_out = a >= d
    sgn = np.sign(np.atleast_1d(arr))
    if np.any(m_in):
        out[m_in] = inner(a[m_in], sgn[m_in], d)
    if np.any(m_out):
        out[m_out] = outer(a[m_out], sgn[m_out], d)
    return float(out[0]) if scalar else out.reshape(arr.shape)


def f1(s, params: SplitParams):
    """Convex part of the split; nonnegative and even."""
    return _eval(
        s,
        lambda a, _, d: -0.5 * a * a * np.log(a * a),
        lambda a, _, d: -0.5 * a * a * (math.log(d * d) + 3.0) + 2.0 * d * a - 0.5 * d * d,
        params,
    )


def f1_prime(s, params: SplitParams):
    """Derivative of f1; odd, continuous, f1'(0) = 0."""
    return _eval(
        s,
        lambda a, g, d: g * (-a * np.log(a * a) - a),
        lambda a, g, d: g * (-a * (math.log(d * d) + 3.0) + 2.0 * d),
        params,
    )


def f2(s, params: SplitParams):
    """Polynomial-growth part; identically zero on [-delta, delta]."""
    return _eval(
        s,
        lambda a, _, d: np.zeros_like(a),
        lambda a, _, d: (
            0.5 * a * a * np.log(a * a / (d * d))
            - 1.5 * a * a
            + 2.0 * d * a
            - 0.5 * d * d
        ),
        params,
    )


def f2_prime(s, params: SplitParams):
    """Derivative of f2; zero on [-delta, delta], odd."""
    return _eval(
        s,
        lambda a, g, d: np.zeros_like(a),
        lambda a, g, d: g * (a * np.log(a * a / (d * d)) - 2.0 * a + 2.0 * d),
        params,
    )
