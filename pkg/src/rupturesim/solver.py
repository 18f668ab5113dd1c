"""Spatial discretization and backward-Euler stepping on the periodic domain.

Uniform nodes, piecewise-linear hat functions for the point loads, lumped
mass.  Each implicit step solves a periodic tridiagonal system whose matrix
has a positive diagonal, nonpositive off-diagonals, and strict diagonal
dominance, so the step is order preserving; that monotonicity is what the
rupture and return-map layers rely on.  The periodic system is reduced to
one banded solve plus a rank-one correction.

``fourier_reference`` provides an independent mild-solution oracle for the
decoupled equation, evolving Fourier modes of the deviation from the
stationary profile exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .config import ModelConfig, effective_parameters
from .errors import DomainError, LinearSolveError, UnsupportedError
from . import stationary

_STEP_RESIDUAL_TOL = 1.0e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: node j sits at ``j*omega/n``."""

    n: int
    omega: float
    dx: float
    nodes: np.ndarray


def build_grid(config: ModelConfig, n: int | None = None) -> Grid:
    """Grid with ``n`` nodes (default from the config numerics)."""
    if n is None:
        n = config.numerics.grid_points
    if n < 4:
        raise DomainError("grid needs at least 4 nodes")
    dx = config.omega / n
    return Grid(n=n, omega=config.omega, dx=dx, nodes=np.arange(n) * dx)


@dataclass
class Field:
    """Nodal values of one periodic scalar field at one time instant."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.time)


def constant_field(grid: Grid, value: float, time: float = 0.0) -> Field:
    return Field(grid, np.full(grid.n, float(value)), time)


@dataclass
class CoupledState:
    """Bubble-top height ``h`` and liquid-surface height ``zeta``; the layer
    thickness is their difference."""

    h: Field
    zeta: Field

    @property
    def time(self) -> float:
        return self.zeta.time

    @property
    def eta(self) -> Field:
        return Field(self.zeta.grid, self.zeta.values - self.h.values, self.zeta.time)

    def copy(self) -> "CoupledState":
        return CoupledState(self.h.copy(), self.zeta.copy())


@dataclass(frozen=True)
class Operators:
    """Grid operators and load vectors shared by all steps of one run.

    ``load`` is the nodal forcing of the reduced thickness equation
    (delta parts split by hat-function weights, divided by the lumped
    mass, minus the effective constant offset); ``load_raw`` is the same
    construction from the unscaled strengths and offset, used by the
    height equation.  The stiffness action is the periodic second
    difference with row pattern ``(-1, 2, -1)/dx**2``.
    """

    grid: Grid
    sigma: float
    alpha: float
    load: np.ndarray
    load_raw: np.ndarray
    sigma_h: float
    tau: float

    def stiffness_matvec(self, v: np.ndarray) -> np.ndarray:
        return (2.0 * v - np.roll(v, 1) - np.roll(v, -1)) / self.grid.dx**2

    @property
    def lumped_mass(self) -> float:
        return self.grid.dx


def _load_vector(
    grid: Grid, junctions: tuple[float, ...], strengths: tuple[float, ...], offset: float
) -> np.ndarray:
    weights = np.zeros(grid.n)
    for a, c in zip(junctions, strengths):
        pos = (a % grid.omega) / grid.dx
        j = int(math.floor(pos)) % grid.n
        frac = pos - math.floor(pos)
        weights[j] += c * (1.0 - frac)
        weights[(j + 1) % grid.n] += c * frac
    return weights / grid.dx - offset


def assemble_operators(grid: Grid, config: ModelConfig) -> Operators:
    sigma_eff, strengths_eff, offset_eff = effective_parameters(config)
    return Operators(
        grid=grid,
        sigma=sigma_eff,
        alpha=config.alpha,
        load=_load_vector(grid, config.junctions, strengths_eff, offset_eff),
        load_raw=_load_vector(
            grid, config.junctions, config.jump_strengths, config.forcing_offset
        ),
        sigma_h=config.sigma1 / config.tau,
        tau=config.tau,
    )


def solve_periodic_tridiagonal(diag: float, off: float, rhs: np.ndarray) -> np.ndarray:
    """Solve the cyclic tridiagonal system with constant diagonals.

    The two corner entries are removed by a rank-one correction, leaving
    two right-hand sides for a single banded solve.  The solution is
    checked against the original system; a residual above
    ``1e-12 * ||rhs||`` raises :class:`LinearSolveError` (it cannot occur
    for the diagonally dominant step matrices in exact arithmetic).
    """
    n = rhs.shape[0]
    gamma = -diag
    bands = np.zeros((3, n))
    bands[0, 1:] = off
    bands[2, :-1] = off
    bands[1, :] = diag
    bands[1, 0] = diag - gamma
    bands[1, -1] = diag - off * off / gamma

    rhs2 = np.zeros((n, 2))
    rhs2[:, 0] = rhs
    rhs2[0, 1] = gamma
    rhs2[-1, 1] = off
    y, z = solve_banded((1, 1), bands, rhs2, check_finite=False).T

    ratio = off / gamma
    factor = (y[0] + ratio * y[-1]) / (1.0 + z[0] + ratio * z[-1])
    x = y - factor * z

    residual = diag * x + off * (np.roll(x, 1) + np.roll(x, -1)) - rhs
    limit = _STEP_RESIDUAL_TOL * np.max(np.abs(rhs))
    worst = np.max(np.abs(residual))
    if not np.isfinite(worst) or worst > limit:
        raise LinearSolveError(f"cyclic solve residual {worst:g} exceeds {limit:g}")
    return x


def step_decoupled(state: Field, dt: float, ops: Operators) -> Field:
    """One backward-Euler step of the reduced thickness equation."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    dx2 = ops.grid.dx**2
    diag = 1.0 / dt + 2.0 * ops.sigma / dx2 + ops.alpha
    off = -ops.sigma / dx2
    rhs = state.values / dt + ops.load
    return Field(state.grid, solve_periodic_tridiagonal(diag, off, rhs), state.time + dt)


def step_coupled(h: Field, zeta: Field, dt: float, ops: Operators) -> tuple[Field, Field]:
    """One backward-Euler step of the height/surface pair.

    The height equation is autonomous and is advanced first; the surface
    equation then uses the fresh height in its relaxation term, so the
    splitting introduces no error into the height and only a first-order
    term into the surface.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    dx2 = ops.grid.dx**2
    diag_h = 1.0 / dt + 2.0 * ops.sigma_h / dx2
    off_h = -ops.sigma_h / dx2
    h_new = solve_periodic_tridiagonal(diag_h, off_h, h.values / dt - ops.load_raw / ops.tau)

    diag_z = 1.0 / dt + 2.0 * ops.sigma / dx2 + ops.alpha
    off_z = -ops.sigma / dx2
    z_new = solve_periodic_tridiagonal(diag_z, off_z, zeta.values / dt + ops.alpha * h_new)
    t = h.time + dt
    return Field(h.grid, h_new, t), Field(zeta.grid, z_new, t)


def advance(state: Field | CoupledState, dt: float, ops: Operators):
    """Single step of whichever system the state belongs to."""
    if isinstance(state, CoupledState):
        h, zeta = step_coupled(state.h, state.zeta, dt, ops)
        return CoupledState(h, zeta)
    return step_decoupled(state, dt, ops)


def evolve(state: Field | CoupledState, t_end: float, dt: float, ops: Operators):
    """Step to ``t_end`` with steps of ``dt``, shortening the last step to
    land exactly; performs no rupture checks."""
    time = state.time
    if t_end < time:
        raise ValueError("t_end precedes the current state time")
    while time < t_end:
        remaining = t_end - time
        step_dt = dt if remaining > dt * (1.0 + 1.0e-12) else remaining
        state = advance(state, step_dt, ops)
        time = state.time
    if isinstance(state, CoupledState):
        state.h.time = t_end
        state.zeta.time = t_end
    else:
        state.time = t_end
    return state


def fourier_reference(config: ModelConfig, eta0: Field, t: float) -> Field:
    """Exact mild solution of the decoupled equation at time ``t``.

    Decomposes the deviation of the initial data from the stationary
    profile into discrete Fourier modes and applies the exact decay
    ``exp(-(sigma*k**2 + alpha)*t)`` per mode.  Defined only for the
    decoupled reduction with positive evaporation.
    """
    if config.mode != "decoupled":
        raise UnsupportedError("reference solution is defined for decoupled mode only")
    if config.alpha <= 0.0:
        raise UnsupportedError("reference solution requires alpha > 0")
    grid = eta0.grid
    profile = stationary.solve_stationary(config)
    s_nodes = stationary.eval_stationary(profile, grid.nodes)
    sigma_eff, _, _ = effective_parameters(config)

    wavenumbers = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.dx)
    decay = np.exp(-(sigma_eff * wavenumbers**2 + config.alpha) * t)
    modes = np.fft.fft(eta0.values - s_nodes)
    values = s_nodes + np.fft.ifft(modes * decay).real
    return Field(grid, values, eta0.time + t)
