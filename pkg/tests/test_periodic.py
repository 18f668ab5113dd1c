import math

import numpy as np
import pytest

from rupturesim.errors import ModelViolationError, UnsupportedError
from rupturesim import periodic, rupture, solver, stationary
from rupturesim.periodic import (
    default_invariant_band,
    distinguished_interval,
    find_periodic,
    gradient_probe,
    in_invariant_set,
    poincare_map,
    splice,
    verify_periodic,
)
from rupturesim.solver import Field, build_grid, constant_field


@pytest.fixture(scope="module")
def ex1_profile(ex1):
    return stationary.solve_stationary(ex1)


@pytest.fixture(scope="module")
def ex1_converged(ex1):
    return find_periodic(ex1, fp_tol=1e-6, max_iter=45)


def test_distinguished_interval_is_the_long_one(ex1, ex1_profile):
    assert distinguished_interval(ex1_profile, ex1) == 0


def test_splice_overwrites_the_open_interval(ex1):
    grid = build_grid(ex1, 10)  # junctions 0.1 and 0.6 are nodes
    xi = constant_field(grid, 0.5)
    out = splice(xi, ex1, 0)
    assert out.values[1] == 0.5  # left junction node excluded
    assert np.all(out.values[2:6] == ex1.eta_a)
    assert np.all(out.values[6:] == 0.5)


def test_map_stays_in_the_long_interval_and_inside_bounds(ex1, ex1_profile):
    grid = build_grid(ex1)
    s_nodes = stationary.eval_stationary(ex1_profile, grid.nodes)
    xi = Field(grid, s_nodes + 0.01, 0.0)
    mapped, t_r = poincare_map(xi, ex1, ex1_profile)
    start = splice(xi, ex1, 0)
    report = rupture.rupture_time_bounds(ex1, start)
    assert report.t_lower <= t_r <= report.t_upper
    assert mapped.grid is grid


def test_map_is_a_fixed_point_after_convergence(ex1, ex1_profile, ex1_converged):
    fixed = ex1_converged.fixed_profile
    mapped, _ = poincare_map(fixed, ex1, ex1_profile)
    assert periodic.sup_diff_outside(mapped, fixed, ex1, 0) <= 1e-6
    twice, _ = poincare_map(mapped, ex1, ex1_profile)
    assert periodic.sup_diff_outside(twice, mapped, ex1, 0) <= 1e-6


def test_map_detects_delocalized_rupture(ex2):
    profile = stationary.solve_stationary(ex2)
    with pytest.raises(ModelViolationError):
        xi = constant_field(build_grid(ex2), ex2.eta_a)
        for _ in range(6):
            xi, _ = poincare_map(xi, ex2, profile)


def test_find_periodic_converges(ex1, ex1_converged):
    report = ex1_converged
    assert report.converged
    assert len(report.iterates) <= 40
    diffs = [d for _, _, d in report.iterates]
    assert diffs[-1] <= 1e-6
    assert all(b < a for a, b in zip(diffs[2:], diffs[3:]))
    assert report.period == pytest.approx(0.02097, abs=2e-4)


def test_find_periodic_reaches_the_same_fixed_point_from_a_sine_start(ex1, ex1_converged):
    grid = build_grid(ex1)
    xi0 = Field(
        grid,
        ex1.eta_a + 0.5 * ex1.eta_a * np.sin(2.0 * np.pi * grid.nodes / ex1.omega),
        0.0,
    )
    report = find_periodic(ex1, xi0, fp_tol=1e-6, max_iter=45)
    assert report.converged
    gap = periodic.sup_diff_outside(
        report.fixed_profile, ex1_converged.fixed_profile, ex1, 0
    )
    assert gap <= 2e-6


def test_find_periodic_with_vacuous_tolerance(ex1):
    report = find_periodic(ex1, fp_tol=math.inf, max_iter=10)
    assert report.converged
    assert len(report.iterates) == 1
    assert report.period == report.iterates[0][1]


def test_verify_periodic_accepts_the_converged_orbit(ex1, ex1_converged):
    assert verify_periodic(ex1, ex1_converged.fixed_profile, 1e-5)


def test_verify_periodic_rejects_a_perturbed_profile(ex1, ex1_converged):
    # a smooth bump survives one period (a one-node spike would diffuse away);
    # the inter-event gaps stay close but the profile comparison fails
    tol = 1e-5
    bumped = ex1_converged.fixed_profile.copy()
    grid = bumped.grid
    bumped.values = bumped.values + 10.0 * tol * np.cos(2.0 * np.pi * grid.nodes / ex1.omega)
    start = splice(bumped, ex1, 0)
    start.time = 0.0
    events, _ = rupture.run_with_rupture(ex1, start, max_events=2)
    gap_one, gap_two = events[0].time, events[1].time - events[0].time
    assert abs(gap_two - gap_one) <= 2.0 * ex1.numerics.dt
    assert not verify_periodic(ex1, bumped, tol)


def test_verify_periodic_with_vacuous_tolerance(ex1, ex1_converged):
    assert verify_periodic(ex1, ex1_converged.fixed_profile, math.inf)


def test_iterates_stay_in_the_invariant_band(ex1, ex1_profile):
    band = default_invariant_band(ex1_profile, ex1)
    s_min = min(lo for lo, _ in stationary.interval_extrema(ex1_profile))
    assert s_min + band > ex1.eta_a
    grid = build_grid(ex1)
    s_nodes = stationary.eval_stationary(ex1_profile, grid.nodes)
    xi = Field(grid, s_nodes + 0.005, 0.0)
    assert in_invariant_set(xi, ex1_profile, ex1, 0, band)
    for _ in range(6):
        xi, _ = poincare_map(xi, ex1, ex1_profile)
        assert in_invariant_set(xi, ex1_profile, ex1, 0, band)


def test_coupled_search_reports_non_convergence(ex3):
    report = find_periodic(ex3, fp_tol=1e-6, max_iter=10)
    assert not report.converged
    assert len(report.iterates) == 10
    assert all(d > 1e-6 for _, _, d in report.iterates)


def test_gradient_probe_zero_data_zero_constants():
    from rupturesim.config import ModelConfig

    cfg = ModelConfig(
        omega=1.0,
        junctions=(0.5,),
        jump_strengths=(0.0,),
        forcing_offset=0.0,
        sigma1=1.0,
        sigma2=1.0,
        tau=1.0,
        alpha=1.0,
        eta_c=0.01,
        eta_a=0.03,
        d=0.1,
    )
    grid = build_grid(cfg, 64)
    report = gradient_probe(cfg, constant_field(grid, 1.0), [0.01, 0.1])
    assert report.c0 == 0.0 and report.c1 == 0.0
    assert all(g == pytest.approx(0.0, abs=1e-12) for _, g, _ in report.samples)


def test_gradient_probe_bound_holds_at_every_sample(ex1):
    grid = build_grid(ex1, 512)
    report = gradient_probe(ex1, constant_field(grid, ex1.eta_a), [1e-3, 1e-2, 1e-1, 1.0])
    for _, grad, bound in report.samples:
        assert grad <= bound * (1.0 + 1e-9)
    assert math.isfinite(report.c0) and math.isfinite(report.c1)


def test_gradient_probe_homogeneous_part_is_linear(ex1):
    grid = build_grid(ex1, 512)
    profile = stationary.solve_stationary(ex1)
    s_nodes = stationary.eval_stationary(profile, grid.nodes)
    bump = 0.01 * np.sin(4.0 * np.pi * grid.nodes)
    gamma = 2.5
    ops = solver.assemble_operators(grid, ex1)
    t = 0.05
    base = solver.evolve(Field(grid, s_nodes.copy(), 0.0), t, ex1.numerics.dt, ops)
    one = solver.evolve(Field(grid, s_nodes + bump, 0.0), t, ex1.numerics.dt, ops)
    two = solver.evolve(Field(grid, s_nodes + gamma * bump, 0.0), t, ex1.numerics.dt, ops)
    lhs = two.values - base.values
    rhs = gamma * (one.values - base.values)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(rhs))


def test_gradient_probe_rejects_coupled_mode(ex3):
    grid = build_grid(ex3, 64)
    with pytest.raises(UnsupportedError):
        gradient_probe(ex3, constant_field(grid, 1.0), [0.1])
