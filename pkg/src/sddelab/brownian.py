"""Brownian increment lattices shared across grid resolutions.

Increments are generated once per path at the finest resolution from a
counter-based stream keyed by (master_seed, path_index), so any path can
be regenerated bitwise without touching the others and results never
depend on execution order.  Coarser grids reuse the same randomness by
summing fine increments; the summation is pairwise over power-of-two
blocks so that coarsening by 2 twice equals coarsening by 4 bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# |mean| above this many standard errors of a zero-mean sample gets
# flagged on the lattice (a smell worth surfacing, not an error).
_MEAN_FLAG_SIGMAS = 5.0


def _delay_periods(horizon: float, delay: float) -> int:
    """horizon as an exact positive integer multiple of delay."""
    periods = horizon / delay
    n = round(periods)
    if n < 1 or abs(periods - n) > 1e-9 * max(1.0, abs(periods)):
        raise ValueError(
            f"horizon must be a positive integer multiple of the delay; "
            f"got horizon={horizon}, delay={delay}")
    return int(n)


@dataclass
class BrownianLattice:
    """Increments of a Brownian path on a uniform grid over [0, horizon].

    increments has shape (n_fine_steps, noise_dim) with variance
    fine_delta = delay / fine_steps_per_delay per entry.  suspicious_mean
    flags a sample mean implausibly far from zero.
    """

    delay: float
    horizon: float
    fine_steps_per_delay: int
    increments: np.ndarray
    master_seed: int
    path_index: int
    suspicious_mean: bool = False
    _values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n_periods = _delay_periods(self.horizon, self.delay)
        expected = n_periods * self.fine_steps_per_delay
        if self.increments.ndim != 2 or self.increments.shape[0] != expected:
            raise ValueError(
                f"increments must have shape ({expected}, noise_dim), "
                f"got {self.increments.shape}")

    @property
    def n_fine_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def noise_dim(self) -> int:
        return self.increments.shape[1]

    @property
    def fine_delta(self) -> float:
        return self.delay / self.fine_steps_per_delay

    def path_values(self) -> np.ndarray:
        """Cumulative path B(t_j), shape (n_fine_steps + 1, noise_dim), B(0) = 0."""
        if self._values is None:
            values = np.empty((self.n_fine_steps + 1, self.noise_dim))
            values[0] = 0.0
            np.cumsum(self.increments, axis=0, out=values[1:])
            self._values = values
        return self._values


def _flag_mean(increments: np.ndarray, fine_delta: float) -> bool:
    n = increments.shape[0]
    tol = _MEAN_FLAG_SIGMAS * math.sqrt(fine_delta / n)
    return bool(np.any(np.abs(increments.mean(axis=0)) > tol))


def generate_lattice(model, horizon: float, fine_steps_per_delay: int,
                     master_seed: int, path_index: int) -> BrownianLattice:
    """Draw one path's increments at the finest resolution.

    The stream is keyed by (master_seed, path_index); the same pair
    always reproduces the same lattice bitwise.
    """
    if fine_steps_per_delay < 1 or fine_steps_per_delay != int(fine_steps_per_delay):
        raise ValueError(
            f"fine_steps_per_delay must be a positive integer, got {fine_steps_per_delay}")
    n_periods = _delay_periods(horizon, model.delay)
    n_fine = n_periods * int(fine_steps_per_delay)
    fine_delta = model.delay / fine_steps_per_delay
    key = np.array([master_seed, path_index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    increments = rng.standard_normal((n_fine, model.noise_dim)) * math.sqrt(fine_delta)
    return BrownianLattice(
        delay=model.delay,
        horizon=float(horizon),
        fine_steps_per_delay=int(fine_steps_per_delay),
        increments=increments,
        master_seed=int(master_seed),
        path_index=int(path_index),
        suspicious_mean=_flag_mean(increments, fine_delta),
    )


def _block_sums(increments: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive blocks of the given length, pairwise while even.

    Halving adjacent pairs while the factor is even makes power-of-two
    coarsening telescope exactly: two factor-2 passes produce the same
    bits as one factor-4 pass.  Any odd remainder is summed left to right.
    """
    n, m = increments.shape
    blocks = increments.reshape(n // factor, factor, m)
    while blocks.shape[1] % 2 == 0 and blocks.shape[1] > 1:
        blocks = blocks[:, 0::2, :] + blocks[:, 1::2, :]
    out = blocks[:, 0, :]
    for j in range(1, blocks.shape[1]):
        out = out + blocks[:, j, :]
    return out


def coarsen(lattice: BrownianLattice, factor: int) -> BrownianLattice:
    """Lattice on the grid that is `factor` times coarser.

    factor must divide fine_steps_per_delay so the coarse grid still
    contains every delay multiple.
    """
    if factor < 1 or factor != int(factor):
        raise ValueError(f"coarsening factor must be a positive integer, got {factor}")
    factor = int(factor)
    if lattice.fine_steps_per_delay % factor != 0:
        raise ValueError(
            f"coarsening factor {factor} does not divide "
            f"fine_steps_per_delay={lattice.fine_steps_per_delay}")
    if factor == 1:
        increments = lattice.increments
    else:
        increments = _block_sums(lattice.increments, factor)
    coarse_steps = lattice.fine_steps_per_delay // factor
    return BrownianLattice(
        delay=lattice.delay,
        horizon=lattice.horizon,
        fine_steps_per_delay=coarse_steps,
        increments=increments,
        master_seed=lattice.master_seed,
        path_index=lattice.path_index,
        suspicious_mean=_flag_mean(increments, lattice.delay / coarse_steps),
    )


def brownian_value(lattice: BrownianLattice, fine_index: int) -> np.ndarray:
    """B at grid time fine_index * fine_delta, as a (noise_dim,) vector."""
    if fine_index < 0 or fine_index > lattice.n_fine_steps:
        raise IndexError(
            f"fine_index {fine_index} outside [0, {lattice.n_fine_steps}]")
    return lattice.path_values()[int(fine_index)]
