"""Explicit one-step schemes on uniform delay grids.

The grid ties the step size to the delay: delta = delay / steps_per_delay,
so the delayed argument of step k is exactly the stored value of step
k - steps_per_delay and no interpolation into the past is ever needed.
Scalar models run a plain-float inner loop; vector models run the same
recursion on arrays.  Both produce identical IEEE arithmetic for the
same inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .brownian import BrownianLattice, _delay_periods
from .truncation import TruncationPolicy, pi_delta, truncated_coeffs, truncation_radius

# Classical (untruncated) runs freeze a path once it leaves this ball and
# report the step at which that happened.
DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with steps_per_delay points per delay interval."""

    steps_per_delay: int
    delay: float
    horizon: float
    delta: float = field(init=False)
    total_steps: int = field(init=False)

    def __post_init__(self):
        m = self.steps_per_delay
        if m < 1 or m != int(m):
            raise ValueError(f"steps_per_delay must be a positive integer, got {m}")
        if not (self.delay > 0):
            raise ValueError(f"delay must be positive, got {self.delay}")
        n_periods = _delay_periods(self.horizon, self.delay)
        object.__setattr__(self, "delta", self.delay / m)
        object.__setattr__(self, "total_steps", n_periods * int(m))


@dataclass
class Trajectory:
    """Grid values of one simulated path, including the history segment.

    Row i of grid_values holds the state at step index i - steps_per_delay,
    so steps run from -steps_per_delay (time -delay) through total_steps
    (time horizon).  truncation_events counts steps at which projecting
    either coefficient argument actually moved it.  diverged_at records
    the first step whose state left the divergence ball (classical runs
    only; the path is frozen from there on).
    """

    grid: GridSpec
    grid_values: np.ndarray
    truncation_events: int = 0
    diverged_at: Optional[int] = None

    def value(self, step: int) -> np.ndarray:
        m = self.grid.steps_per_delay
        if step < -m or step > self.grid.total_steps:
            raise IndexError(
                f"step {step} outside [{-m}, {self.grid.total_steps}]")
        return self.grid_values[step + m]

    def times(self) -> np.ndarray:
        g = self.grid
        return np.arange(-g.steps_per_delay, g.total_steps + 1) * g.delta


def _initial_scalar(model, grid: GridSpec) -> list:
    m, delta = grid.steps_per_delay, grid.delta
    return [float(model.initial((k - m) * delta)) for k in range(m + 1)]


def _initial_vector(model, grid: GridSpec) -> np.ndarray:
    m, delta = grid.steps_per_delay, grid.delta
    out = np.empty((m + 1, model.state_dim))
    for k in range(m + 1):
        out[k] = np.asarray(model.initial((k - m) * delta), dtype=float)
    return out


def _coerce_increments(increments, grid: GridSpec, noise_dim: int) -> np.ndarray:
    if isinstance(increments, BrownianLattice):
        if increments.fine_steps_per_delay != grid.steps_per_delay:
            raise ValueError(
                f"lattice resolution {increments.fine_steps_per_delay} does not "
                f"match grid steps_per_delay {grid.steps_per_delay}; coarsen first")
        increments = increments.increments
    arr = np.asarray(increments, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape != (grid.total_steps, noise_dim):
        raise ValueError(
            f"increments must have shape ({grid.total_steps}, {noise_dim}), "
            f"got {arr.shape}")
    return arr


def tem_step(model, policy: TruncationPolicy, delta: float, x, x_delayed, dB):
    """One step of the truncated scheme from state x with delayed state x_delayed."""
    drift, diffusion = truncated_coeffs(model, policy, delta)
    if model.scalar and np.ndim(x) == 0:
        xv, yv = float(x), float(x_delayed)
        db = float(dB) if np.ndim(dB) == 0 else float(np.asarray(dB).reshape(()))
        return xv + drift(xv, yv) * delta + diffusion(xv, yv) * db
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(x_delayed, dtype=float)
    db = np.atleast_1d(np.asarray(dB, dtype=float))
    f = np.asarray(drift(xv, yv), dtype=float)
    g = np.asarray(diffusion(xv, yv), dtype=float).reshape(model.state_dim,
                                                           model.noise_dim)
    return xv + f * delta + g @ db


def _run_scalar_truncated(model, grid, dB, radius):
    delta, m, total = grid.delta, grid.steps_per_delay, grid.total_steps
    f, g = model.drift, model.diffusion
    values = _initial_scalar(model, grid)
    append = values.append
    x = values[m]
    events = 0
    for k in range(total):
        y = values[k]
        px, py, hit = x, y, False
        if x > radius:
            px, hit = radius, True
        elif x < -radius:
            px, hit = -radius, True
        if y > radius:
            py, hit = radius, True
        elif y < -radius:
            py, hit = -radius, True
        if hit:
            events += 1
        x = x + f(px, py) * delta + g(px, py) * dB[k]
        append(x)
    return np.asarray(values)[:, None], events


def _run_vector_truncated(model, grid, dB, radius):
    delta, m, total = grid.delta, grid.steps_per_delay, grid.total_steps
    f, g = model.drift, model.diffusion
    n = model.state_dim
    values = np.empty((total + m + 1, n))
    values[: m + 1] = _initial_vector(model, grid)
    events = 0
    x = values[m]
    for k in range(total):
        y = values[k]
        px = pi_delta(x, radius)
        py = pi_delta(y, radius)
        if px is not x or py is not y:
            events += 1
        fv = np.asarray(f(px, py), dtype=float)
        gv = np.asarray(g(px, py), dtype=float).reshape(n, model.noise_dim)
        x = x + fv * delta + gv @ dB[k]
        values[m + 1 + k] = x
    return values, events


def simulate(model, policy: TruncationPolicy, grid: GridSpec, increments) -> Trajectory:
    """Run the truncated scheme over the whole grid.

    increments supplies the grid-resolution Brownian increments, either
    as a (total_steps, noise_dim) array or as a lattice already at the
    grid's resolution.
    """
    radius = truncation_radius(policy, grid.delta)
    arr = _coerce_increments(increments, grid, model.noise_dim)
    if model.scalar:
        values, events = _run_scalar_truncated(model, grid, arr[:, 0].tolist(), radius)
    else:
        values, events = _run_vector_truncated(model, grid, arr, radius)
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.all(np.isfinite(values), axis=1)))
        raise FloatingPointError(
            f"non-finite state at step {bad - grid.steps_per_delay}; "
            f"the truncated coefficients are bounded, so this points at the "
            f"model's initial data or a non-finite increment")
    return Trajectory(grid, values, truncation_events=events)


def _run_scalar_classical(model, grid, dB):
    delta, m, total = grid.delta, grid.steps_per_delay, grid.total_steps
    f, g = model.drift, model.diffusion
    values = _initial_scalar(model, grid)
    append = values.append
    x = values[m]
    diverged_at = None
    for k in range(total):
        prev = x
        x = x + f(x, values[k]) * delta + g(x, values[k]) * dB[k]
        if abs(x) > DIVERGENCE_THRESHOLD or math.isnan(x):
            diverged_at = k + 1
            freeze = x if math.isfinite(x) else prev
            values.extend([freeze] * (total - k))
            break
        append(x)
    return np.asarray(values)[:, None], diverged_at


def _run_vector_classical(model, grid, dB):
    delta, m, total = grid.delta, grid.steps_per_delay, grid.total_steps
    f, g = model.drift, model.diffusion
    n = model.state_dim
    values = np.empty((total + m + 1, n))
    values[: m + 1] = _initial_vector(model, grid)
    x = values[m]
    diverged_at = None
    for k in range(total):
        prev = x
        y = values[k]
        fv = np.asarray(f(x, y), dtype=float)
        gv = np.asarray(g(x, y), dtype=float).reshape(n, model.noise_dim)
        x = x + fv * delta + gv @ dB[k]
        nrm = math.sqrt(float(np.dot(x, x)))
        if nrm > DIVERGENCE_THRESHOLD or not math.isfinite(nrm):
            diverged_at = k + 1
            freeze = x if np.all(np.isfinite(x)) else prev
            values[m + 1 + k:] = freeze
            break
        values[m + 1 + k] = x
    return values, diverged_at


def simulate_classical_em(model, grid: GridSpec, increments) -> Trajectory:
    """Run the raw (untruncated) explicit scheme, freezing divergent paths.

    Superlinear models can and do blow up under this scheme at moderate
    step sizes; once the state leaves the divergence ball (or turns
    non-finite) the path is frozen at the last representable value and
    diverged_at records the offending step.
    """
    arr = _coerce_increments(increments, grid, model.noise_dim)
    if model.scalar:
        values, diverged_at = _run_scalar_classical(model, grid, arr[:, 0].tolist())
    else:
        values, diverged_at = _run_vector_classical(model, grid, arr)
    return Trajectory(grid, values, truncation_events=0, diverged_at=diverged_at)


def step_process_value(traj: Trajectory, t: float) -> np.ndarray:
    """Piecewise-constant (left-continuous grid) reading of the path at time t.

    Valid for t in [-delay, horizon]; t exactly on the grid returns that
    grid value, interior t returns the value at the step just below.
    """
    grid = traj.grid
    m, total, delta = grid.steps_per_delay, grid.total_steps, grid.delta
    tol = 1e-12 * max(1.0, abs(grid.horizon))
    if t < -grid.delay - tol or t > grid.horizon + tol:
        raise ValueError(f"time {t} outside [{-grid.delay}, {grid.horizon}]")
    k = int(math.floor(t / delta))
    # float division can land one step off near grid points; nudge until
    # k * delta <= t < (k + 1) * delta holds in exact float comparisons.
    while (k + 1) * delta <= t:
        k += 1
    while k * delta > t:
        k -= 1
    k = max(-m, min(total, k))
    return traj.value(k)


def continuous_process_values(model, policy: TruncationPolicy, traj: Trajectory,
                              lattice: BrownianLattice) -> np.ndarray:
    """The interpolated scheme read on the lattice's fine grid.

    Between consecutive grid points the state moves with frozen truncated
    coefficients along the actual Brownian path, so the returned array
    (n_fine_steps + 1, state_dim) coincides with the grid values at every
    grid time and fills the gaps consistently with the step recursion.
    """
    grid = traj.grid
    m, total, delta = grid.steps_per_delay, grid.total_steps, grid.delta
    if abs(lattice.delay - grid.delay) > 1e-12 * max(1.0, grid.delay):
        raise ValueError("lattice and grid disagree on the delay")
    if abs(lattice.horizon - grid.horizon) > 1e-12 * max(1.0, grid.horizon):
        raise ValueError("lattice and grid disagree on the horizon")
    if lattice.fine_steps_per_delay % m != 0:
        raise ValueError(
            f"lattice resolution {lattice.fine_steps_per_delay} is not a "
            f"multiple of grid steps_per_delay {m}")
    factor = lattice.fine_steps_per_delay // m
    values = lattice.path_values()
    offsets = np.arange(factor) * lattice.fine_delta
    drift, diffusion = truncated_coeffs(model, policy, delta)
    gv = traj.grid_values
    out = np.empty((lattice.n_fine_steps + 1, model.state_dim))
    if model.scalar:
        bpath = values[:, 0]
        for k in range(total):
            x, y = gv[k + m, 0], gv[k, 0]
            fv, gvl = drift(x, y), diffusion(x, y)
            j0 = k * factor
            out[j0:j0 + factor, 0] = x + offsets * fv + \
                (bpath[j0:j0 + factor] - bpath[j0]) * gvl
    else:
        n = model.state_dim
        for k in range(total):
            x, y = gv[k + m], gv[k]
            fv = np.asarray(drift(x, y), dtype=float)
            gmat = np.asarray(diffusion(x, y), dtype=float).reshape(n, model.noise_dim)
            j0 = k * factor
            seg = values[j0:j0 + factor] - values[j0]
            out[j0:j0 + factor] = x + offsets[:, None] * fv + seg @ gmat.T
    out[::factor] = gv[m:]  # exact grid coincidence by construction
    return out
