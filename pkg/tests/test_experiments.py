"""Sweep orchestration, reference profiles, and the empirical diagnostics.

The closed-form constant-potential profile doubles as an oracle here: its
level c0 is known analytically, so the sweep rows of a constant-potential
problem can be checked against an independent number instead of against
the solver itself.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from logpen import (
    PotentialSpec,
    SolverConfig,
    build_grid,
    init_bump,
    integrate,
    solve_ground_state,
)
from logpen.config import ProblemSpec
from logpen.energy import ProblemContext
from logpen.errors import ConfigError, InsufficientRows
from logpen.experiments import (
    SweepRow,
    concentration_report,
    epsilon_sweep,
    equivalence_check,
    gausson_reference,
    log_bound_probe,
    make_context,
    sweep_box,
)
from logpen.grid import dirichlet_form
from logpen.logsplit import SplitParams
from logpen.penalty import Region, build_penalty

# Closed-form levels 0.5 * exp(dim + v0) * pi^(dim/2) for the profile
# amp * exp(-|x|^2/2), amp = exp((dim + v0)/2).
REFERENCE_CASES = [
    (1, 0.0, 1.6487212707001281, 2.409014547349361),
    (2, 0.0, 2.718281828459045, 11.606702178681694),
    (1, -0.5, 1.2840254166877414, 1.4611411826611389),
]


class TestGaussonReference:
    @pytest.mark.parametrize("dim,v0,amp,c0", REFERENCE_CASES)
    def test_frozen_constants(self, dim, v0, amp, c0):
        ref = gausson_reference(dim, v0)
        assert ref.amplitude == pytest.approx(amp, rel=1e-15)
        assert ref.c0 == pytest.approx(c0, rel=1e-14)

    def test_peak_value_at_cell_center(self):
        ref = gausson_reference(1, 0.0)
        grid = build_grid(1, -8.0, 8.0, 0.05)
        center = grid.center_mesh()[0][160]
        v = ref.values(grid, center=(center,))
        assert v[160] == ref.amplitude
        assert v.max() == ref.amplitude

    def test_half_mass_equals_level_1d(self):
        # At a critical point the level collapses to half the mass, which
        # gives a quadrature-only route to c0 with no solver involved.
        ref = gausson_reference(1, 0.0)
        grid = build_grid(1, -8.0, 8.0, 0.01)
        half_mass = 0.5 * integrate(grid, ref.values(grid) ** 2)
        assert half_mass == pytest.approx(ref.c0, rel=1e-12)

    def test_half_mass_equals_level_2d(self):
        ref = gausson_reference(2, 0.0)
        grid = build_grid(2, -6.0, 6.0, 0.05)
        half_mass = 0.5 * integrate(grid, ref.values(grid) ** 2)
        assert half_mass == pytest.approx(ref.c0, rel=1e-12)

    def test_field_wraps_grid(self):
        ref = gausson_reference(1, 0.0)
        grid = build_grid(1, -8.0, 8.0, 0.1)
        f = ref.field(grid)
        assert f.grid is grid
        np.testing.assert_array_equal(f.values, ref.values(grid))


def _spec(dim=1, lam_lo=(-1.0,), lam_hi=(2.0,), base=8.0, h=0.05, eps=(1.0,),
          potential=None, **kw):
    pot = potential if potential is not None else PotentialSpec(kind="constant", v0=0.0)
    return ProblemSpec(
        dim=dim,
        potential=pot,
        lam=Region(lo=lam_lo, hi=lam_hi),
        h=h,
        base_lo=(-base,) * dim,
        base_hi=(base,) * dim,
        eps_list=tuple(eps),
        **kw,
    )


class TestSweepBox:
    def test_region_inside_base_box_keeps_it(self):
        spec = _spec()
        assert sweep_box(spec, 1.0) == ((-8.0,), (8.0,))

    def test_small_eps_enlarges_per_axis(self):
        spec = _spec()
        # lo: min(-8, -1/0.125 - 4) = -12, hi: max(8, 2/0.125 + 4) = 20
        assert sweep_box(spec, 0.125) == ((-12.0,), (20.0,))

    def test_anisotropic_2d(self):
        spec = _spec(dim=2, lam_lo=(-1.0, -2.0), lam_hi=(2.0, 1.0), base=6.0)
        lo, hi = sweep_box(spec, 0.25)
        assert lo == (-8.0, -12.0)
        assert hi == (12.0, 8.0)


class TestMakeContext:
    def test_wires_grid_penalty_and_scale(self):
        spec = _spec(lam_lo=(-8.0,), lam_hi=(8.0,))
        ctx = make_context(spec, 0.5)
        assert ctx.eps == 0.5
        assert ctx.grid.lo == (-20.0,)
        assert ctx.grid.hi == (20.0,)
        assert ctx.penalty.a0 > spec.delta

    def test_inside_mask_is_rescaled_region(self):
        spec = _spec(lam_lo=(-8.0,), lam_hi=(8.0,))
        ctx = make_context(spec, 0.5)
        x = ctx.grid.center_mesh()[0]
        np.testing.assert_array_equal(ctx.inside, (x > -16.0) & (x < 16.0))


@pytest.fixture(scope="module")
def eq_setup():
    # The region must be wide enough that the solution tail outside it
    # falls below a0, otherwise the run is honestly non-equivalent.
    spec = _spec(lam_lo=(-3.0,), lam_hi=(3.0,), base=6.0, h=0.1)
    ctx = make_context(spec, 1.0)
    seed = init_bump(ctx.grid, (0.0,), 1.0, gausson_reference(1, 0.0).amplitude)
    result = solve_ground_state(ctx, seed, SolverConfig(restarts=1, residual_tol=1e-5))
    assert result.converged
    return ctx, result


class TestEquivalenceCheck:
    def test_converged_solution_is_equivalent(self, eq_setup):
        ctx, result = eq_setup
        rep = equivalence_check(result, ctx)
        assert rep.equivalent
        assert rep.margin == pytest.approx(ctx.penalty.a0 - result.sup_outside)
        assert rep.unpenalized_residual is not None
        # Below a0 the capped and plain slopes coincide, so the residual of
        # the original equation cannot drift far from the penalized one.
        assert rep.unpenalized_residual <= 10.0 * result.residual

    def test_zero_outside_gives_full_margin(self, eq_setup):
        ctx, result = eq_setup
        x = ctx.grid.center_mesh()[0]
        v = np.where(np.abs(x) < 1.0, 0.7, 0.0)
        rep = equivalence_check(replace(result, u=replace(result.u, values=v)), ctx)
        assert rep.equivalent
        assert rep.margin == ctx.penalty.a0
        assert rep.unpenalized_residual is not None

    def test_outside_value_at_threshold_fails(self, eq_setup):
        ctx, result = eq_setup
        v = np.array(result.u.values)
        v[0] = ctx.penalty.a0  # leftmost cell sits outside the region
        rep = equivalence_check(replace(result, u=replace(result.u, values=v)), ctx)
        assert not rep.equivalent
        assert rep.margin == 0.0
        assert rep.unpenalized_residual is None

    def test_outside_value_just_below_threshold_passes(self, eq_setup):
        ctx, result = eq_setup
        v = np.array(result.u.values)
        v[0] = ctx.penalty.a0 - 1e-6
        rep = equivalence_check(replace(result, u=replace(result.u, values=v)), ctx)
        assert rep.equivalent
        assert rep.margin == pytest.approx(1e-6, rel=1e-6)


@pytest.fixture(scope="module")
def const_sweep_spec():
    return _spec(
        lam_lo=(-8.0,),
        lam_hi=(8.0,),
        eps=(1.0, 0.5),
        solver=SolverConfig(restarts=1),
        rng_seed=0,
    )


@pytest.fixture(scope="module")
def const_sweep_rows(const_sweep_spec):
    return epsilon_sweep(const_sweep_spec)


class TestEpsilonSweep:
    def test_rows_converge_to_reference_level(self, const_sweep_rows):
        c0 = gausson_reference(1, 0.0).c0
        assert [r.eps for r in const_sweep_rows] == [1.0, 0.5]
        for row in const_sweep_rows:
            assert row.converged
            assert row.failure is None
            assert abs(row.c_eps - c0) < 2e-3

    def test_maximizer_stays_at_the_origin(self, const_sweep_rows, const_sweep_spec):
        for row in const_sweep_rows:
            assert len(row.eta) == 1
            assert abs(row.eta[0]) <= const_sweep_spec.h
            assert row.V_eta == 0.0

    def test_rows_are_penalization_equivalent(self, const_sweep_rows):
        for row in const_sweep_rows:
            assert row.equivalent == (row.sup_outside < row.a0)
            assert row.equivalent
            assert row.unpenalized_residual is not None
            assert row.unpenalized_residual <= 10.0 * row.residual

    def test_boxes_follow_the_margin_policy(self, const_sweep_rows):
        assert const_sweep_rows[0].box_used == ((-12.0, 12.0),)
        assert const_sweep_rows[1].box_used == ((-20.0, 20.0),)

    def test_repeat_run_is_bitwise_identical(self, const_sweep_spec, const_sweep_rows):
        again = epsilon_sweep(const_sweep_spec)
        for a, b in zip(const_sweep_rows, again):
            assert a == b

    def test_worker_count_does_not_change_rows(self, const_sweep_spec, const_sweep_rows):
        threaded = epsilon_sweep(const_sweep_spec, max_workers=2)
        for a, b in zip(const_sweep_rows, threaded):
            assert a == b

    def test_constant_potential_report_passes(self, const_sweep_rows, const_sweep_spec):
        rep = concentration_report(const_sweep_rows, const_sweep_spec)
        assert rep.passed
        assert rep.monotone and rep.final_ok
        assert rep.final_gap == 0.0
        assert rep.messages == ()

    def test_failed_rows_are_recorded_not_raised(self, const_sweep_spec):
        rows = epsilon_sweep(const_sweep_spec, config=SolverConfig(restarts=1, max_iters=2))
        assert len(rows) == 2
        for row in rows:
            assert not row.converged
            assert row.failure is not None
            assert math.isnan(row.c_eps)
        with pytest.raises(InsufficientRows):
            concentration_report(rows, const_sweep_spec)


def _synthetic_row(eps, v_eta, converged=True):
    return SweepRow(
        eps=eps,
        c_eps=2.4,
        eta=(0.5,),
        V_eta=v_eta,
        sup_outside=0.0,
        a0=0.17,
        equivalent=True,
        residual=1e-9,
        iters=10,
        box_used=((-8.0, 8.0),),
        converged=converged,
    )


class TestConcentrationReport:
    def test_decreasing_gaps_pass(self):
        spec = _spec()
        rows = [_synthetic_row(e, g) for e, g in [(1.0, 0.5), (0.5, 0.2), (0.25, 0.01)]]
        rep = concentration_report(rows, spec)
        assert rep.passed
        assert rep.final_gap == pytest.approx(0.01)
        assert [e[0] for e in rep.entries] == [1.0, 0.5, 0.25]

    def test_rows_are_sorted_by_decreasing_eps(self):
        spec = _spec()
        rows = [_synthetic_row(e, g) for e, g in [(0.25, 0.01), (1.0, 0.5), (0.5, 0.2)]]
        rep = concentration_report(rows, spec)
        assert [e[0] for e in rep.entries] == [1.0, 0.5, 0.25]
        assert rep.passed

    def test_rising_gap_fails_with_message(self):
        spec = _spec()
        rows = [_synthetic_row(1.0, 0.1), _synthetic_row(0.5, 0.3)]
        rep = concentration_report(rows, spec)
        assert not rep.monotone
        assert not rep.passed
        assert any("rose" in m for m in rep.messages)

    def test_rise_within_tolerance_is_monotone(self):
        spec = _spec()
        rows = [_synthetic_row(1.0, 0.01), _synthetic_row(0.5, 0.01 + 5e-7)]
        rep = concentration_report(rows, spec)
        assert rep.monotone

    def test_large_final_gap_fails(self):
        spec = _spec()
        rows = [_synthetic_row(1.0, 0.5), _synthetic_row(0.5, 0.2)]
        rep = concentration_report(rows, spec)
        assert rep.monotone
        assert not rep.final_ok
        assert not rep.passed
        assert any("threshold" in m for m in rep.messages)

    def test_unconverged_rows_are_ignored(self):
        spec = _spec()
        rows = [
            _synthetic_row(1.0, 0.5),
            _synthetic_row(0.5, 9.9, converged=False),
            _synthetic_row(0.25, 0.01),
        ]
        rep = concentration_report(rows, spec)
        assert rep.passed
        assert len(rep.entries) == 2

    def test_fewer_than_two_converged_rows_raise(self):
        spec = _spec()
        rows = [_synthetic_row(1.0, 0.0), _synthetic_row(0.5, 0.0, converged=False)]
        with pytest.raises(InsufficientRows):
            concentration_report(rows, spec)


@pytest.fixture(scope="module")
def probe_grid():
    return build_grid(1, -8.0, 8.0, 0.05)


@pytest.fixture(scope="module")
def probe_report(probe_grid):
    return log_bound_probe(100, 0, probe_grid)


class TestLogBoundProbe:
    def test_zero_heldout_violations(self, probe_report):
        assert probe_report.violations == 0
        assert probe_report.n_calibration == 100
        assert probe_report.n_test == 100

    def test_fit_is_finite_with_positive_slope(self, probe_report):
        assert math.isfinite(probe_report.a_hat)
        assert probe_report.b_hat > 0.0
        assert math.isfinite(probe_report.c_corollary)
        assert probe_report.c_corollary > 0.0

    def test_deterministic_given_seed(self, probe_grid, probe_report):
        assert log_bound_probe(100, 0, probe_grid) == probe_report

    def test_other_seed_and_size_also_clean(self, probe_grid):
        assert log_bound_probe(200, 1, probe_grid).violations == 0

    def test_small_corpus_rejected(self, probe_grid):
        with pytest.raises(ConfigError):
            log_bound_probe(49, 0, probe_grid)

    def test_reference_profile_satisfies_fitted_bound(self, probe_grid, probe_report):
        ref = gausson_reference(1, 0.0)
        v = ref.values(probe_grid)
        lhs = integrate(probe_grid, np.where(v > 0, v * v * np.log(v * v), 0.0))
        h1 = math.sqrt(dirichlet_form(probe_grid, v) + integrate(probe_grid, v * v))
        assert lhs == pytest.approx(ref.c0, rel=1e-12)
        assert h1 == pytest.approx(2.6883161350644911, abs=1e-3)
        assert lhs <= probe_report.a_hat + probe_report.b_hat * math.log(h1)

    def test_left_side_grows_superquadratically(self, probe_grid):
        # integral of (tu)^2 log (tu)^2 is t^2 (L + M log t^2), so doubling
        # ladders must outpace the pure t^2 growth a quadratic bound allows.
        v = gausson_reference(1, 0.0).values(probe_grid)

        def lhs(t):
            w = t * v
            return integrate(probe_grid, np.where(w > 0, w * w * np.log(w * w), 0.0))

        assert lhs(32.0) > 32.0**2 * lhs(1.0)


class TestGridConsistency:
    def test_level_error_shrinks_like_h_squared(self):
        # Halving h four-folds the change in the computed level, the
        # signature of second-order convergence toward the analytic c0.
        pot = PotentialSpec(kind="constant", v0=0.0)
        ref = gausson_reference(1, 0.0)
        levels = []
        for h in (0.2, 0.1, 0.05):
            grid = build_grid(1, -8.0, 8.0, h)
            pen = build_penalty(SplitParams(0.1), Region(lo=(-8.0,), hi=(8.0,)), 1.0, 0.0, 0.25)
            ctx = ProblemContext(grid, pot, 1.0, pen)
            res = solve_ground_state(
                ctx, init_bump(grid, (0.0,), 1.0, ref.amplitude), SolverConfig(restarts=1)
            )
            assert res.converged
            levels.append(res.energy_I)
        gaps = [abs(c - ref.c0) for c in levels]
        assert gaps[0] > gaps[1] > gaps[2]
        ratio = (levels[1] - levels[0]) / (levels[2] - levels[1])
        assert 3.0 < ratio < 5.0
