"""Monte Carlo studies: strong errors, moment stability, interpolation gap.

Every study draws path i from the stream keyed (master_seed, i) and
reduces per-path results in path order, so outputs are bitwise
independent of how many worker processes ran the paths.  One lattice is
alive per path at a time; all grids for that path reuse it by coarsening.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .brownian import coarsen, generate_lattice
from .solvers import GridSpec, continuous_process_values, simulate

_CI_SIGMAS = 1.96  # two-sided 95% normal quantile


# Worker closures reach forked processes through this module global; the
# pool is created after it is set, so children inherit it. Results are
# reassembled in path order either way.
_ACTIVE_WORKER = None


def _invoke_worker(path_index: int):
    return _ACTIVE_WORKER(path_index)


def _map_paths(worker, n_paths: int, threads: int) -> list:
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    if threads == 1 or n_paths < 2 * threads:
        return [worker(i) for i in range(n_paths)]
    global _ACTIVE_WORKER
    _ACTIVE_WORKER = worker
    try:
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, n_paths // (threads * 4))
        with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
            return list(pool.map(_invoke_worker, range(n_paths), chunksize=chunk))
    except (ValueError, OSError):
        # No fork on this platform: run in process, results are identical.
        return [worker(i) for i in range(n_paths)]
    finally:
        _ACTIVE_WORKER = None


def _mean_and_stderr(samples: np.ndarray):
    """Column means and their standard errors (sample std / sqrt(n))."""
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    std_err = samples.std(axis=0, ddof=1) / math.sqrt(n)
    return mean, std_err


@dataclass(frozen=True)
class ExperimentPlan:
    """A coupled-resolution strong-error study.

    Every entry of m_list must divide m_ref so each coarse grid is an
    exact coarsening of the reference lattice; the reference solution is
    the scheme itself at m_ref steps per delay on the same randomness.
    """

    model: object
    policy: object
    horizon: float
    m_list: Sequence[int]
    m_ref: int
    q_list: Sequence[float] = (2.0,)
    n_paths: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        m_list = tuple(int(m) for m in self.m_list)
        if not m_list:
            raise ValueError("m_list must not be empty")
        if sorted(set(m_list)) != list(m_list):
            raise ValueError(f"m_list must be strictly increasing, got {list(self.m_list)}")
        if any(m < 1 for m in m_list):
            raise ValueError(f"m_list entries must be positive, got {list(self.m_list)}")
        for m in m_list:
            if self.m_ref % m != 0:
                raise ValueError(
                    f"every m_list entry must divide m_ref: {m} does not divide {self.m_ref}")
        if self.m_ref < max(m_list):
            raise ValueError(f"m_ref={self.m_ref} must be >= max(m_list)={max(m_list)}")
        q_list = tuple(float(q) for q in self.q_list)
        if not q_list or any(q <= 0 for q in q_list):
            raise ValueError(f"q_list must contain positive moments, got {list(self.q_list)}")
        if self.n_paths < 2:
            raise ValueError(f"need n_paths >= 2 for standard errors, got {self.n_paths}")
        object.__setattr__(self, "m_list", m_list)
        object.__setattr__(self, "q_list", q_list)
        # Fails early if horizon is not a whole number of delays.
        GridSpec(m_list[0], self.model.delay, self.horizon)


@dataclass(frozen=True)
class ErrorRow:
    steps_per_delay: int
    delta: float
    q: float
    err_q: float
    std_err: float
    n_paths: int


@dataclass
class ErrorTable:
    """Terminal strong errors E|X_coarse(T) - X_ref(T)|^q per grid and q."""

    rows: list
    m_ref: int
    master_seed: int

    def for_q(self, q: float) -> list:
        return [r for r in self.rows if r.q == q]

    def write_csv(self, stream, rate_reports: Sequence["RateReport"] = ()):
        stream.write("M,delta,q,err_q,std_err,n_paths\n")
        for r in self.rows:
            stream.write(f"{r.steps_per_delay},{_fmt(r.delta)},{_fmt(r.q)},"
                         f"{_fmt(r.err_q)},{_fmt(r.std_err)},{r.n_paths}\n")
        for rep in rate_reports:
            stream.write(rep.comment_line())


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class RateReport:
    """Least-squares rate fit of log err_q against log delta."""

    q: float
    slope: Optional[float]
    intercept: Optional[float]
    r_squared: Optional[float]
    ci_halfwidth: Optional[float]
    n_rows: int
    exact: bool = False

    def comment_line(self) -> str:
        if self.exact:
            return f"# q={_fmt(self.q)} rate=exact (all errors zero)\n"
        return (f"# q={_fmt(self.q)} slope={_fmt(self.slope)} "
                f"ci={_fmt(self.ci_halfwidth)} r2={_fmt(self.r_squared)} "
                f"intercept={_fmt(self.intercept)} n_rows={self.n_rows}\n")


def estimate_strong_errors(plan: ExperimentPlan, threads: int = 1) -> ErrorTable:
    """Coupled terminal errors of every coarse grid against the reference grid."""
    model, policy = plan.model, plan.policy
    tau = model.delay
    ref_grid = GridSpec(plan.m_ref, tau, plan.horizon)
    grids = [GridSpec(m, tau, plan.horizon) for m in plan.m_list]
    factors = [plan.m_ref // m for m in plan.m_list]

    def worker(path_index: int) -> np.ndarray:
        lattice = generate_lattice(model, plan.horizon, plan.m_ref,
                                   plan.master_seed, path_index)
        x_ref = simulate(model, policy, ref_grid, lattice.increments).grid_values[-1]
        out = np.empty((len(grids), len(plan.q_list)))
        for j, grid in enumerate(grids):
            coarse = coarsen(lattice, factors[j])
            x = simulate(model, policy, grid, coarse.increments).grid_values[-1]
            err = float(np.linalg.norm(x - x_ref))
            for jq, q in enumerate(plan.q_list):
                out[j, jq] = err ** q
        return out

    samples = np.stack(_map_paths(worker, plan.n_paths, threads))
    mean, std_err = _mean_and_stderr(samples)
    rows = []
    for jq, q in enumerate(plan.q_list):
        for j, grid in enumerate(grids):
            rows.append(ErrorRow(grid.steps_per_delay, grid.delta, q,
                                 float(mean[j, jq]), float(std_err[j, jq]),
                                 plan.n_paths))
    return ErrorTable(rows, plan.m_ref, plan.master_seed)


def fit_rate(table: ErrorTable, q: float = 2.0) -> RateReport:
    """Unweighted log-log fit; the CI half-width propagates each row's
    standard error through d(log e) = de / e (delta method, 95%)."""
    rows = table.for_q(q)
    if len(rows) < 3:
        raise ValueError(f"need at least 3 rows to fit a rate, got {len(rows)} for q={q}")
    nonzero = [r for r in rows if r.err_q > 0.0]
    if not nonzero:
        return RateReport(q, None, None, None, None, len(rows), exact=True)
    if len(nonzero) < 3:
        raise ValueError(
            f"only {len(nonzero)} rows with nonzero error for q={q}; "
            f"the coupling is exact on the rest, no rate to fit")
    x = np.log([r.delta for r in nonzero])
    y = np.log([r.err_q for r in nonzero])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    rel_var = np.array([(r.std_err / r.err_q) ** 2 for r in nonzero])
    slope_var = float(np.dot((xc / sxx) ** 2, rel_var))
    return RateReport(q, slope, intercept, r_squared,
                      _CI_SIGMAS * math.sqrt(slope_var), len(nonzero))


@dataclass
class SupMomentResult:
    """sup over grid times of the p-th absolute moment, with the full curve."""

    times: np.ndarray
    moments: np.ndarray
    std_errs: np.ndarray
    sup_moment: float
    std_err: float
    argmax_time: float
    p: float
    n_paths: int

    def write_csv(self, stream):
        stream.write("t,moment_p,std_err\n")
        for t, v, se in zip(self.times, self.moments, self.std_errs):
            stream.write(f"{_fmt(t)},{_fmt(v)},{_fmt(se)}\n")
        stream.write(f"# p={_fmt(self.p)} sup={_fmt(self.sup_moment)} "
                     f"std_err={_fmt(self.std_err)} at_t={_fmt(self.argmax_time)} "
                     f"n_paths={self.n_paths}\n")


def estimate_sup_moment(model, policy, grid: GridSpec, p: float,
                        n_paths: int, master_seed: int,
                        threads: int = 1) -> SupMomentResult:
    """Monte Carlo estimate of sup_{0 <= t_k <= T} E |X(t_k)|^p."""
    if not (p > 0):
        raise ValueError(f"moment order p must be positive, got {p}")
    if n_paths < 2:
        raise ValueError(f"need n_paths >= 2, got {n_paths}")
    m = grid.steps_per_delay

    def worker(path_index: int) -> np.ndarray:
        lattice = generate_lattice(model, grid.horizon, m, master_seed, path_index)
        traj = simulate(model, policy, grid, lattice.increments)
        states = traj.grid_values[m:]
        return np.linalg.norm(states, axis=1) ** p

    samples = np.stack(_map_paths(worker, n_paths, threads))
    moments, std_errs = _mean_and_stderr(samples)
    idx = int(np.argmax(moments))
    times = np.arange(grid.total_steps + 1) * grid.delta
    return SupMomentResult(times, moments, std_errs,
                           float(moments[idx]), float(std_errs[idx]),
                           float(times[idx]), float(p), n_paths)


@dataclass
class GapTable:
    """Mean p-th power gap between interpolated and step readings over time."""

    times: np.ndarray
    gap_p: np.ndarray
    std_errs: np.ndarray
    p: float
    n_paths: int
    steps_per_delay: int
    lattice_resolution: int

    @property
    def max_gap(self) -> float:
        return float(self.gap_p.max())

    def write_csv(self, stream):
        stream.write("t,gap_p,std_err\n")
        for t, v, se in zip(self.times, self.gap_p, self.std_errs):
            stream.write(f"{_fmt(t)},{_fmt(v)},{_fmt(se)}\n")
        stream.write(f"# p={_fmt(self.p)} max_gap={_fmt(self.max_gap)} "
                     f"M={self.steps_per_delay} fine={self.lattice_resolution} "
                     f"n_paths={self.n_paths}\n")


def gap_study(model, policy, grid: GridSpec, lattice_resolution: int, p: float,
              n_paths: int, master_seed: int, threads: int = 1) -> GapTable:
    """E |X_cont(u) - X_step(u)|^p on the fine lattice grid.

    The two readings agree at grid times by construction, so the
    interesting rows are the fine times strictly inside grid intervals.
    """
    if not (p > 0):
        raise ValueError(f"moment order p must be positive, got {p}")
    if n_paths < 2:
        raise ValueError(f"need n_paths >= 2, got {n_paths}")
    m = grid.steps_per_delay
    if lattice_resolution % m != 0:
        raise ValueError(
            f"lattice_resolution {lattice_resolution} must be a multiple of "
            f"grid steps_per_delay {m}")
    factor = lattice_resolution // m

    def worker(path_index: int) -> np.ndarray:
        lattice = generate_lattice(model, grid.horizon, lattice_resolution,
                                   master_seed, path_index)
        coarse = coarsen(lattice, factor)
        traj = simulate(model, policy, grid, coarse.increments)
        cont = continuous_process_values(model, policy, traj, lattice)
        step = np.repeat(traj.grid_values[m:-1], factor, axis=0)
        step = np.vstack([step, traj.grid_values[-1:]])
        return np.linalg.norm(cont - step, axis=1) ** p

    samples = np.stack(_map_paths(worker, n_paths, threads))
    gap_p, std_errs = _mean_and_stderr(samples)
    n_fine = grid.total_steps * factor
    times = np.arange(n_fine + 1) * (grid.delay / lattice_resolution)
    return GapTable(times, gap_p, std_errs, float(p), n_paths,
                    m, lattice_resolution)
