"""Fast invariant battery runnable without a config file.

Each check returns (name, passed, detail).  The battery covers the exact
algebraic identities (splitting reconstruction, derivative matching at the
threshold, the energy identity), the discrete operator contracts
(summation-by-parts nonnegativity, stencil exactness on quadratics), the
penalty constants, the fiber scaling law, and one coarse constant-potential
solve against the closed-form level.
"""

from __future__ import annotations

import math

import numpy as np

from .energy import PotentialSpec, ProblemContext, identity_gap, grad_I
from .experiments import gausson_reference
from .grid import ScalarField, build_grid, dirichlet_form, integrate, laplacian_values
from .logsplit import SplitParams, delta_convexity_bound, f1, f1_prime, f2, f2_prime
from .nehari import project_nehari
from .penalty import Region, build_penalty, g2
from .solver import SolverConfig, init_bump, solve_ground_state

__all__ = ["run_selftest"]


def _check_split():
    sp = SplitParams(0.1)
    s = np.concatenate(
        [np.geomspace(1e-8, 1e3, 141), -np.geomspace(1e-8, 1e3, 141), [0.0]]
    )
    recon = f2(s, sp) - f1(s, sp)
    ref = np.where(s != 0, 0.5 * s * s * np.log(np.where(s != 0, s * s, 1.0)), 0.0)
    err = float(np.max(np.abs(recon - ref) / np.maximum(1.0, np.abs(ref))))
    d = sp.delta
    # inner-branch formula evaluated at the threshold vs the outer branch
    c1 = abs((-d * math.log(d * d) - d) - f1_prime(d, sp))
    ok = err < 1e-12 and c1 < 1e-12 and abs(delta_convexity_bound() - math.exp(-1.5)) == 0
    return ("splitting reconstruction and C1 matching", ok, f"max rel err {err:.2e}")


def _check_penalty():
    sp = SplitParams(0.1)
    pen = build_penalty(sp, Region((-1.0,), (1.0,)), 1.0, 0.0)
    resid = abs(f2_prime(pen.a0, sp) / pen.a0 - pen.l)
    ss = np.geomspace(1e-6, 50.0, 300)
    ine = all(
        g2((2.0,), float(s), pen) <= f2(float(s), sp) + 1e-12 * max(1.0, f2(float(s), sp))
        for s in ss
    )
    ok = resid < 1e-10 and pen.a0 > sp.delta and ine
    return ("penalty threshold and domination", ok, f"a0={pen.a0:.6f} resid={resid:.1e}")


def _check_grid():
    g = build_grid(1, -8.0, 8.0, 0.01)
    x = g.centers(0)
    quad = ScalarField(g, x * x)
    lap = laplacian_values(g, quad.values)
    interior = slice(1, -1)
    lap_err = float(np.max(np.abs(lap[interior] - 2.0)))
    gauss = np.exp(-x * x)
    q_err = abs(integrate(g, gauss) - math.sqrt(math.pi))
    rng = np.random.default_rng(7)
    ok_sbp = True
    for _ in range(5):
        v = rng.normal(size=g.n_cells)
        quad_form = integrate(g, -laplacian_values(g, v) * v)
        dir_form = dirichlet_form(g, v)
        if quad_form < 0 or abs(quad_form - dir_form) > 1e-10 * max(1.0, dir_form):
            ok_sbp = False
    ok = lap_err < 1e-9 and q_err < 1e-6 and ok_sbp
    return ("stencil, quadrature, summation by parts", ok, f"lap {lap_err:.1e} quad {q_err:.1e}")


def _ctx_const(h=0.05, v0=0.0, dim=1):
    half = 8.0 if dim == 1 else 6.0
    g = build_grid(dim, (-half,) * dim, (half,) * dim, h)
    pot = PotentialSpec(kind="constant", v0=v0)
    lam = Region((-half,) * dim, (half,) * dim)
    pen = build_penalty(SplitParams(0.1), lam, 1.0, v0)
    return ProblemContext(g, pot, 1.0, pen)


def _check_identity():
    ctx = _ctx_const(h=0.1)
    rng = np.random.default_rng(11)
    x = ctx.grid.centers(0)
    worst = 0.0
    for _ in range(20):
        v = rng.uniform(0.1, 3.0) * np.exp(
            -((x - rng.uniform(-2, 2)) ** 2) / rng.uniform(0.5, 4.0)
        ) + rng.uniform(0.0, 0.05, size=x.shape)
        gap = identity_gap(ctx.grid, ctx.pot, 1.0, ctx.penalty.split, ScalarField(ctx.grid, v))
        worst = max(worst, gap)
    return ("energy identity on random positive fields", worst < 1e-10, f"max gap {worst:.2e}")


def _check_gradient():
    ctx = _ctx_const(h=0.25)
    rng = np.random.default_rng(3)
    x = ctx.grid.centers(0)
    v = np.exp(-x * x / 2.0) + 0.05 * rng.normal(size=x.shape)
    u = ScalarField(ctx.grid, v)
    g = grad_I(ctx.grid, ctx.pot, 1.0, ctx.penalty, u).values
    fd = np.zeros_like(v)
    step = 1e-6
    for i in range(v.size):
        vp = v.copy(); vp[i] += step
        vm = v.copy(); vm[i] -= step
        fd[i] = (
            ctx.energy_I_values(vp) - ctx.energy_I_values(vm)
        ) / (2 * step)
    rel = float(np.linalg.norm(fd - g) / np.linalg.norm(g))
    return ("gradient matches finite differences", rel < 1e-5, f"rel err {rel:.2e}")


def _check_fiber():
    ctx = _ctx_const(h=0.05)
    u = init_bump(ctx.grid, (0.3,), 1.2, 1.5)
    t1 = project_nehari(u, ctx).t_u
    t2 = project_nehari(ScalarField(ctx.grid, 2.0 * u.values), ctx).t_u
    scaled = ScalarField(ctx.grid, t1 * u.values)
    t3 = project_nehari(scaled, ctx).t_u
    ok = abs(t2 - 0.5 * t1) < 1e-8 * t1 and abs(t3 - 1.0) < 1e-8
    return ("fiber scaling and idempotence", ok, f"t_u={t1:.6f}")


def _check_solve():
    ctx = _ctx_const(h=0.05)
    ref = gausson_reference(1, 0.0)
    cfg = SolverConfig(max_iters=20000, rng_seed=1)
    res = solve_ground_state(ctx, init_bump(ctx.grid, (0.0,), 1.0, ref.amplitude), cfg)
    gap = abs(res.energy_J - ref.c0)
    ok = res.converged and gap < 1e-2 and res.positive
    return ("coarse constant-potential solve", ok, f"|c - c0| = {gap:.2e}")


def run_selftest() -> list[tuple[str, bool, str]]:
    checks = [
        _check_split,
        _check_penalty,
        _check_grid,
        _check_identity,
        _check_gradient,
        _check_fiber,
        _check_solve,
    ]
    return [c() for c in checks]
