import numpy as np
import pytest

from rupturesim.config import ModelConfig, config_from_dict
from rupturesim.errors import DomainError, UnsupportedError
from rupturesim import stationary
from rupturesim.solver import (
    Field,
    assemble_operators,
    build_grid,
    constant_field,
    evolve,
    fourier_reference,
    solve_periodic_tridiagonal,
    step_coupled,
    step_decoupled,
)


def plain_config(**over):
    kwargs = dict(
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
    kwargs.update(over)
    return ModelConfig(**kwargs)


def test_build_grid_spacing():
    grid = build_grid(plain_config(), 10)
    assert grid.dx == 0.1
    assert np.allclose(grid.nodes, np.arange(10) * 0.1)
    grid2 = build_grid(plain_config(omega=2.0, junctions=(1.0,)), 8)
    assert grid2.dx == 0.25


def test_build_grid_rejects_tiny_grids():
    with pytest.raises(DomainError):
        build_grid(plain_config(), 3)


def test_build_grid_default_size(ex1):
    assert build_grid(ex1).n == 1024


def test_point_load_on_a_node():
    cfg = plain_config(junctions=(0.5,), jump_strengths=(2.0,))
    grid = build_grid(cfg, 10)
    ops = assemble_operators(grid, cfg)
    assert ops.load[5] == pytest.approx(2.0 / grid.dx)
    assert np.count_nonzero(ops.load) == 1


def test_point_load_at_a_midpoint():
    cfg = plain_config(junctions=(0.55,), jump_strengths=(2.0,))
    grid = build_grid(cfg, 10)
    ops = assemble_operators(grid, cfg)
    assert ops.load[5] == pytest.approx(1.0 / grid.dx)
    assert ops.load[6] == pytest.approx(1.0 / grid.dx)


def test_load_preserves_total_strength(ex1):
    grid = build_grid(ex1, 512)
    ops = assemble_operators(grid, ex1)
    total = np.sum(ops.load + ex1.forcing_offset) * grid.dx
    assert total == pytest.approx(3.0, rel=1e-12)


def test_cyclic_solve_against_dense_oracle():
    rng = np.random.default_rng(5)
    for n in (4, 7, 64):
        diag = 4.0 + rng.uniform(0.0, 1.0)
        off = -rng.uniform(0.1, 1.0)
        matrix = np.zeros((n, n))
        for i in range(n):
            matrix[i, i] = diag
            matrix[i, (i + 1) % n] = off
            matrix[i, (i - 1) % n] = off
        rhs = rng.standard_normal(n)
        got = solve_periodic_tridiagonal(diag, off, rhs)
        expected = np.linalg.solve(matrix, rhs)
        assert np.max(np.abs(got - expected)) < 1e-12 * np.max(np.abs(expected))


def test_implicit_step_fixed_point(ex1):
    grid = build_grid(ex1, 256)
    ops = assemble_operators(grid, ex1)
    dx2 = grid.dx**2
    # discrete steady state of the same operator
    steady = solve_periodic_tridiagonal(
        2.0 * ops.sigma / dx2 + ops.alpha, -ops.sigma / dx2, ops.load
    )
    state = Field(grid, steady, 0.0)
    out = step_decoupled(state, 0.05, ops)
    assert np.max(np.abs(out.values - steady)) < 1e-12


def test_implicit_step_constant_decay():
    cfg = plain_config()
    grid = build_grid(cfg, 64)
    ops = assemble_operators(grid, cfg)
    out = step_decoupled(constant_field(grid, 1.0), 0.1, ops)
    assert np.max(np.abs(out.values - 1.0 / 1.1)) < 1e-14
    assert out.time == pytest.approx(0.1)


def test_step_preserves_order():
    cfg = plain_config(junctions=(0.3,), jump_strengths=(1.0,), forcing_offset=1.0)
    grid = build_grid(cfg, 128)
    ops = assemble_operators(grid, cfg)
    rng = np.random.default_rng(17)
    for _ in range(20):
        low = Field(grid, rng.standard_normal(grid.n), 0.0)
        high = Field(grid, low.values + rng.uniform(0.0, 1.0, grid.n), 0.0)
        low = step_decoupled(low, 1e-3, ops)
        high = step_decoupled(high, 1e-3, ops)
        assert np.min(high.values - low.values) >= -1e-12


def test_coupled_step_constant_modes():
    cfg = plain_config(mode="coupled")
    grid = build_grid(cfg, 64)
    ops = assemble_operators(grid, cfg)
    h, zeta = step_coupled(constant_field(grid, 0.0), constant_field(grid, 1.0), 0.1, ops)
    assert np.max(np.abs(h.values)) < 1e-14
    assert np.max(np.abs(zeta.values - 1.0 / 1.1)) < 1e-14


def test_coupled_matches_decoupled_when_rates_agree(ex1, ex3):
    # with sigma1 = sigma2 = tau the thickness of the pair obeys the reduced
    # equation step for step; the relaxation source cancels exactly
    cfg = config_from_dict(
        {
            "omega": 1.0,
            "junctions": [0.1, 0.6, 0.9],
            "jump_strengths": [1.0, 1.0, 1.0],
            "forcing_offset": 3.0,
            "sigma1": 1.0,
            "sigma2": 1.0,
            "tau": 1.0,
            "alpha": 1.0,
            "eta_c": 0.03e-12,
            "eta_a": 0.03,
            "d": 0.1,
            "mode": "coupled",
        }
    )
    grid = build_grid(cfg, 256)
    ops = assemble_operators(grid, cfg)
    rng = np.random.default_rng(23)
    eta = Field(grid, 0.05 + 0.01 * rng.standard_normal(grid.n), 0.0)
    h = Field(grid, 0.3 * np.sin(2 * np.pi * grid.nodes), 0.0)
    zeta = Field(grid, h.values + eta.values, 0.0)
    dt = 1e-3
    for _ in range(50):
        h, zeta = step_coupled(h, zeta, dt, ops)
        eta = step_decoupled(eta, dt, ops)
    assert np.max(np.abs((zeta.values - h.values) - eta.values)) < 1e-10


def test_height_mass_is_conserved(ex3):
    grid = build_grid(ex3, 512)
    ops = assemble_operators(grid, ex3)
    rng = np.random.default_rng(31)
    h = Field(grid, rng.standard_normal(grid.n), 0.0)
    zeta = Field(grid, h.values + 0.05, 0.0)
    before = np.sum(h.values) * grid.dx
    for _ in range(100):
        h, zeta = step_coupled(h, zeta, 1e-3, ops)
    after = np.sum(h.values) * grid.dx
    assert abs(after - before) < 1e-10


def test_evolve_to_current_time_is_identity():
    cfg = plain_config()
    grid = build_grid(cfg, 32)
    ops = assemble_operators(grid, cfg)
    state = constant_field(grid, 1.0)
    out = evolve(state, 0.0, 1e-2, ops)
    assert out.time == 0.0
    assert np.array_equal(out.values, state.values)


def test_evolve_composes():
    cfg = plain_config(junctions=(0.25,), jump_strengths=(1.0,), forcing_offset=0.5)
    grid = build_grid(cfg, 64)
    ops = assemble_operators(grid, cfg)
    state = constant_field(grid, 0.7)
    dt = 1e-3
    once = evolve(state, 2 * dt, dt, ops)
    twice = evolve(evolve(state, dt, dt, ops), 2 * dt, dt, ops)
    assert np.max(np.abs(once.values - twice.values)) < 1e-13


def test_evolve_constant_decay_matches_exponential():
    cfg = plain_config()
    grid = build_grid(cfg, 32)
    ops = assemble_operators(grid, cfg)
    out = evolve(constant_field(grid, 1.0), 1.0, 1e-3, ops)
    assert np.max(np.abs(out.values - np.exp(-1.0))) < 1e-3


def test_reference_fixes_the_stationary_profile(ex1):
    grid = build_grid(ex1, 512)
    profile = stationary.solve_stationary(ex1)
    s_nodes = stationary.eval_stationary(profile, grid.nodes)
    out = fourier_reference(ex1, Field(grid, s_nodes.copy(), 0.0), 0.7)
    assert np.max(np.abs(out.values - s_nodes)) < 1e-10


def test_reference_decays_one_mode_exactly(ex1):
    grid = build_grid(ex1, 512)
    profile = stationary.solve_stationary(ex1)
    s_nodes = stationary.eval_stationary(profile, grid.nodes)
    mode = np.cos(2 * np.pi * grid.nodes / ex1.omega)
    t = 0.17
    out = fourier_reference(ex1, Field(grid, s_nodes + mode, 0.0), t)
    rate = ex1.sigma2 * (2 * np.pi / ex1.omega) ** 2 + ex1.alpha
    expected = s_nodes + np.exp(-rate * t) * mode
    assert np.max(np.abs(out.values - expected)) < 1e-10


def test_reference_at_time_zero_reproduces_data(ex1):
    grid = build_grid(ex1, 256)
    rng = np.random.default_rng(41)
    eta0 = Field(grid, 0.03 + 0.001 * rng.standard_normal(grid.n), 0.0)
    out = fourier_reference(ex1, eta0, 0.0)
    assert np.max(np.abs(out.values - eta0.values)) < 1e-10


def test_reference_rejects_unsupported_regimes(ex3):
    grid = build_grid(ex3, 64)
    with pytest.raises(UnsupportedError):
        fourier_reference(ex3, constant_field(grid, 1.0), 0.1)
    cfg0 = plain_config(alpha=0.0)
    with pytest.raises(UnsupportedError):
        fourier_reference(cfg0, constant_field(build_grid(cfg0, 64), 1.0), 0.1)


def test_discrete_mean_decay_law(ex1):
    grid = build_grid(ex1, 256)
    ops = assemble_operators(grid, ex1)
    state = constant_field(grid, ex1.eta_a)
    dt = 1e-3
    for _ in range(200):
        new = step_decoupled(state, dt, ops)
        lhs = np.mean(new.values) * (1.0 + ex1.alpha * dt)
        rhs = np.mean(state.values)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)
        state = new


def test_translation_equivariance_by_one_node(ex1):
    grid = build_grid(ex1, 512)
    rolled_cfg = config_from_dict(
        {
            "omega": ex1.omega,
            "junctions": [a + grid.dx for a in ex1.junctions],
            "jump_strengths": list(ex1.jump_strengths),
            "forcing_offset": ex1.forcing_offset,
            "sigma1": ex1.sigma1,
            "sigma2": ex1.sigma2,
            "tau": ex1.tau,
            "alpha": ex1.alpha,
            "eta_c": ex1.eta_c,
            "eta_a": ex1.eta_a,
            "d": ex1.d,
            "mode": ex1.mode,
        }
    )
    ops = assemble_operators(grid, ex1)
    ops_rolled = assemble_operators(grid, rolled_cfg)
    rng = np.random.default_rng(53)
    values = rng.standard_normal(grid.n)
    out = step_decoupled(Field(grid, values, 0.0), 1e-3, ops)
    out_rolled = step_decoupled(Field(grid, np.roll(values, 1), 0.0), 1e-3, ops_rolled)
    assert np.max(np.abs(np.roll(out.values, 1) - out_rolled.values)) < 1e-12


def test_system_matrix_is_strictly_diagonally_dominant(ex1):
    grid = build_grid(ex1, 128)
    ops = assemble_operators(grid, ex1)
    dt = 1e-4
    dx2 = grid.dx**2
    diag = 1.0 / dt + 2.0 * ops.sigma / dx2 + ops.alpha
    off = -ops.sigma / dx2
    assert diag > 0.0 and off <= 0.0
    assert diag - 2.0 * abs(off) == pytest.approx(1.0 / dt + ops.alpha, rel=1e-12)
