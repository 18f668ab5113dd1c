"""Rupture-to-rupture return map, fixed-point search, periodicity check,
and a numerical probe of the gradient smoothing estimate.

The return map takes a profile on the complement of the distinguished
interval, overwrites the inside with the reset level, evolves to the next
rupture, and returns the pre-rupture profile.  Its fixed points are
time-periodic solutions; they are found here by plain Picard iteration.
The map is deliberately not assumed to be order preserving.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .config import ModelConfig, effective_parameters
from .errors import ModelViolationError, UnsupportedError
from .rupture import run_with_rupture, rupture_time_bounds
from .solver import (
    CoupledState,
    Field,
    advance,
    assemble_operators,
    build_grid,
    constant_field,
)
from . import stationary


@dataclass(frozen=True)
class PoincareIterate:
    """One return-map iterate: the profile fed to the map, the rupture time
    it produced, and the iteration index."""

    xi: Field
    t_r: float
    iteration_index: int


@dataclass(frozen=True)
class ConvergenceReport:
    """Picard-iteration history of the return map.

    ``iterates`` holds ``(m, t_r, sup_diff)`` per application, where
    ``sup_diff`` is the sup-norm change outside the distinguished interval.
    ``period`` is the rupture time of the final iterate.
    """

    iterates: tuple[tuple[int, float, float], ...]
    converged: bool
    period: float
    fixed_profile: Field


@dataclass(frozen=True)
class GradientProbeReport:
    """Fitted smoothing-estimate constants and the probed data.

    ``samples`` holds ``(t, sup |grad|, fitted bound at t)``; ``c0`` and
    ``c1`` are the smallest constants (minimal ``c0 + c1``) making
    ``c0/sqrt(t) * ||eta0||_inf + c1 * sum|c_k| >= sup|grad|`` hold at
    every probe time.
    """

    samples: tuple[tuple[float, float, float], ...]
    c0: float
    c1: float


def distinguished_interval(profile: stationary.StationaryProfile, config: ModelConfig) -> int:
    """Index of the interval where ruptures are expected to localize: the
    single interval dipping to the threshold when the localization check
    passes, otherwise the interval containing the global minimum."""
    report = stationary.check_condition_S(profile, config)
    if report.rupture_interval_index is not None:
        return report.rupture_interval_index
    mins = [lo for _, lo in report.min_per_interval]
    return int(np.argmin(mins))


def inside_open_interval_mask(grid, config: ModelConfig, index: int) -> np.ndarray:
    """Node mask of the open interval ``(a_i, a_{i+1})`` (periodic wrap)."""
    junctions = config.junctions
    k = len(junctions)
    x = grid.nodes
    if index == k - 1:
        return (x > junctions[-1]) | (x < junctions[0])
    return (x > junctions[index]) & (x < junctions[index + 1])


def splice(xi: Field, config: ModelConfig, index: int) -> Field:
    """Overwrite the open distinguished interval with the reset level."""
    values = xi.values.copy()
    values[inside_open_interval_mask(xi.grid, config, index)] = config.eta_a
    return Field(xi.grid, values, xi.time)


def in_invariant_set(
    xi: Field,
    profile: stationary.StationaryProfile,
    config: ModelConfig,
    index: int,
    bound: float | None = None,
) -> bool:
    """Nodal membership check ``s <= xi <= s + B`` outside the distinguished
    interval; the default ``B`` clears the reset level above the whole
    profile with unit margin."""
    if bound is None:
        bound = default_invariant_band(profile, config)
    outside = ~inside_open_interval_mask(xi.grid, config, index)
    s_nodes = stationary.eval_stationary(profile, xi.grid.nodes[outside])
    v = xi.values[outside]
    return bool(np.all(v >= s_nodes) and np.all(v <= s_nodes + bound))


def default_invariant_band(profile: stationary.StationaryProfile, config: ModelConfig) -> float:
    """Smallest simple band height with ``inf(s + B) > eta_a`` by margin 1."""
    global_min = min(lo for lo, _ in stationary.interval_extrema(profile))
    return config.eta_a - global_min + 1.0


def sup_diff_outside(a: Field, b: Field, config: ModelConfig, index: int) -> float:
    outside = ~inside_open_interval_mask(a.grid, config, index)
    return float(np.max(np.abs(a.values[outside] - b.values[outside])))


def poincare_map(
    xi: Field, config: ModelConfig, profile: stationary.StationaryProfile
) -> tuple[Field, float]:
    """One application of the return map.

    Splices the reset level into the distinguished interval, evolves to the
    located rupture, and returns the pre-rupture profile together with the
    elapsed rupture time.  Assumes the sign condition on the forcing (so a
    rupture is guaranteed); raises :class:`ModelViolationError` when the
    rupture touches any other interval, which indicates the localization
    assumption does not hold for this configuration.
    """
    index = distinguished_interval(profile, config)
    start = splice(xi, config, index)
    start.time = 0.0

    bounds = rupture_time_bounds(config, start)
    cap = None
    if bounds.upper_applicable and math.isfinite(bounds.t_upper):
        # discrete mean decays slightly slower than the continuous one
        cap = bounds.t_upper * (1.0 + config.alpha * config.numerics.dt) + 10.0 * config.numerics.dt
    events, _ = run_with_rupture(config, start, max_events=1, t_end=cap)
    if not events:
        raise ModelViolationError("no rupture located within the predicted horizon")
    event = events[0]
    if event.reset_intervals != (index,):
        raise ModelViolationError(
            f"rupture touched intervals {event.reset_intervals}, expected ({index},)"
        )
    return event.pre_profile, event.time


def find_periodic(
    config: ModelConfig,
    xi0: Field | None = None,
    fp_tol: float | None = None,
    max_iter: int = 50,
) -> ConvergenceReport:
    """Picard-iterate the return map and report the convergence history.

    Non-convergence within ``max_iter`` is an outcome, not an error.  In
    coupled mode the reduced-equation map does not exist; the iteration is
    replaced by a continuous run of the coupled system, comparing
    consecutive pre-rupture thickness profiles, and the report simply
    records whether those stabilized.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if fp_tol is None:
        fp_tol = config.numerics.fp_tol
    profile = stationary.solve_stationary(config)
    index = distinguished_interval(profile, config)
    if xi0 is None:
        xi0 = constant_field(build_grid(config), config.eta_a)

    iterates: list[tuple[int, float, float]] = []
    sup_diff = math.inf
    if config.mode == "coupled":
        grid = xi0.grid
        start_eta = splice(xi0, config, index)
        h0 = constant_field(grid, 0.0)
        state: CoupledState = CoupledState(
            h0, Field(grid, h0.values + start_eta.values, 0.0)
        )
        previous, previous_time = xi0, 0.0
        last = PoincareIterate(xi=xi0, t_r=math.nan, iteration_index=0)
        for m in range(1, max_iter + 1):
            events, state = run_with_rupture(config, state, max_events=1)
            event = events[0]
            last = PoincareIterate(
                xi=event.pre_profile, t_r=event.time - previous_time, iteration_index=m
            )
            sup_diff = sup_diff_outside(last.xi, previous, config, index)
            iterates.append((m, last.t_r, sup_diff))
            previous, previous_time = last.xi, event.time
            if sup_diff <= fp_tol:
                break
    else:
        last = PoincareIterate(xi=xi0, t_r=math.nan, iteration_index=0)
        for m in range(1, max_iter + 1):
            mapped, t_r = poincare_map(last.xi, config, profile)
            sup_diff = sup_diff_outside(mapped, last.xi, config, index)
            iterates.append((m, t_r, sup_diff))
            last = PoincareIterate(xi=mapped, t_r=t_r, iteration_index=m)
            if sup_diff <= fp_tol:
                break

    return ConvergenceReport(
        iterates=tuple(iterates),
        converged=sup_diff <= fp_tol,
        period=iterates[-1][1],
        fixed_profile=last.xi,
    )


def verify_periodic(config: ModelConfig, fixed_profile: Field, tol: float) -> bool:
    """Certify the orbit through two further ruptures.

    Splices the fixed profile, runs two events, and accepts when the two
    inter-event gaps agree within two time steps and the two pre-rupture
    profiles agree within ``tol`` in sup norm.
    """
    profile = stationary.solve_stationary(config)
    index = distinguished_interval(profile, config)
    start = splice(fixed_profile, config, index)
    start.time = 0.0
    events, _ = run_with_rupture(config, start, max_events=2)
    first, second = events
    gap_one = first.time
    gap_two = second.time - first.time
    gaps_match = abs(gap_two - gap_one) <= 2.0 * config.numerics.dt
    profile_diff = float(np.max(np.abs(first.pre_profile.values - second.pre_profile.values)))
    return gaps_match and profile_diff <= tol


def discrete_gradient(field: Field, config: ModelConfig) -> np.ndarray:
    """Nodal derivative: centered differences, switching to one-sided at the
    two nodes bracketing each junction, where the true derivative jumps."""
    v = field.values
    dx = field.grid.dx
    grad = (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * dx)
    n = field.grid.n
    for a in config.junctions:
        left = int(math.floor((a % config.omega) / dx)) % n
        right = (left + 1) % n
        grad[left] = (v[left] - v[left - 1]) / dx
        grad[right] = (v[(right + 1) % n] - v[right]) / dx
    return grad


def _fit_bound_constants(
    times: np.ndarray, grads: np.ndarray, eta0_sup: float, strength_sum: float
) -> tuple[float, float]:
    """Smallest ``(c0, c1)`` (by ``c0 + c1``) with
    ``c0*eta0_sup/sqrt(t) + c1*strength_sum >= grad`` at every sample."""
    u = eta0_sup / np.sqrt(times)
    v = np.full_like(times, strength_sum)
    if np.all(grads <= 0.0):
        return 0.0, 0.0
    result = linprog(
        c=[1.0, 1.0],
        A_ub=np.column_stack([-u, -v]),
        b_ub=-grads,
        bounds=[(0.0, None), (0.0, None)],
        method="highs",
    )
    if not result.success:
        raise UnsupportedError("bound fit infeasible: no gradient budget available")
    return float(result.x[0]), float(result.x[1])


def gradient_probe(
    config: ModelConfig, eta0: Field, times: list[float]
) -> GradientProbeReport:
    """Probe the gradient of the evolved thickness against the smoothing
    estimate ``c0/sqrt(t)*||eta0||_inf + c1*sum|c_k|``.

    The constants are fitted per run (the estimate asserts their existence,
    not their values); stability of the fit under grid refinement is the
    meaningful check.  Decoupled mode only.
    """
    if config.mode != "decoupled":
        raise UnsupportedError("gradient probe is defined for decoupled mode only")
    if any(t <= 0.0 for t in times):
        raise ValueError("probe times must be positive")
    _, strengths, _ = effective_parameters(config)
    ops = assemble_operators(eta0.grid, config)
    dt = config.numerics.dt

    order = np.argsort(times)
    sorted_times = [times[i] for i in order]
    grads = np.empty(len(times))
    state = eta0
    for slot, t in zip(order, sorted_times):
        while state.time < t:
            remaining = t - state.time
            step_dt = dt if remaining > dt * (1.0 + 1.0e-12) else remaining
            state = advance(state, step_dt, ops)
        grads[slot] = float(np.max(np.abs(discrete_gradient(state, config))))

    eta0_sup = float(np.max(np.abs(eta0.values)))
    strength_sum = float(np.sum(np.abs(strengths)))
    c0, c1 = _fit_bound_constants(np.asarray(times, dtype=float), grads, eta0_sup, strength_sum)
    samples = tuple(
        (float(t), float(g), c0 * eta0_sup / math.sqrt(t) + c1 * strength_sum)
        for t, g in zip(times, grads)
    )
    return GradientProbeReport(samples=samples, c0=c0, c1=c1)
