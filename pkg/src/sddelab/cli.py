"""Command line driver.

Every run writes its delimited outputs plus a run_manifest.json echoing
the fully resolved configuration, so the manifest and the master seed
together determine every output byte.  Exit codes: 0 on success, 2 when
an assumption check fails, 1 on operational errors (bad config, bad
grids, I/O).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import __version__, conditions, models, plots
from .brownian import generate_lattice
from .config import (COMMANDS, ConfigError, RunConfig, apply_override,
                     load_config_file, parse_config)
from .experiments import (ExperimentPlan, estimate_strong_errors,
                          estimate_sup_moment, fit_rate, gap_study)
from .models import Example36Params, Example55Params
from .solvers import GridSpec, simulate


def _write_manifest(cfg: RunConfig):
    payload = {
        "package": "sddelab",
        "version": __version__,
        "config": cfg.resolved(),
    }
    path = os.path.join(cfg.output_dir, "run_manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x) -> str:
    return repr(float(x))


def _run_converge(cfg: RunConfig, render: bool) -> int:
    model, policy = cfg.build_model(), cfg.build_policy()
    plan = ExperimentPlan(model, policy, cfg.horizon, cfg.m_list, cfg.m_ref,
                          cfg.q_list, cfg.n_paths, cfg.master_seed)
    table = estimate_strong_errors(plan, threads=cfg.threads)
    reports = [fit_rate(table, q) for q in cfg.q_list]
    out = os.path.join(cfg.output_dir, "errors.csv")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        table.write_csv(fh, reports)
    for report in reports:
        if report.exact:
            print(f"q={report.q:g}: coupling exact, all errors zero")
        else:
            print(f"q={report.q:g}: slope {report.slope:.4f} "
                  f"+/- {report.ci_halfwidth:.4f} (r2 {report.r_squared:.4f})")
    if render:
        plots.convergence_figure(table, reports,
                                 os.path.join(cfg.output_dir, "convergence.png"))
    print(f"wrote {out}")
    return 0


def _run_gap(cfg: RunConfig, render: bool) -> int:
    model, policy = cfg.build_model(), cfg.build_policy()
    grid = GridSpec(cfg.m, model.delay, cfg.horizon)
    table = gap_study(model, policy, grid, cfg.m * cfg.refinement_factor,
                      cfg.p, cfg.n_paths, cfg.master_seed, threads=cfg.threads)
    out = os.path.join(cfg.output_dir, "gap.csv")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        table.write_csv(fh)
    print(f"max over t of mean gap^{cfg.p:g}: {table.max_gap:.6g}")
    if render:
        plots.gap_figure(table, os.path.join(cfg.output_dir, "gap.png"))
    print(f"wrote {out}")
    return 0


def _run_moments(cfg: RunConfig, render: bool) -> int:
    model, policy = cfg.build_model(), cfg.build_policy()
    grid = GridSpec(cfg.m, model.delay, cfg.horizon)
    result = estimate_sup_moment(model, policy, grid, cfg.p, cfg.n_paths,
                                 cfg.master_seed, threads=cfg.threads)
    out = os.path.join(cfg.output_dir, "moments.csv")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        result.write_csv(fh)
    print(f"sup of mean |X|^{cfg.p:g} over grid times: {result.sup_moment:.6g} "
          f"(at t={result.argmax_time:g})")
    if render:
        plots.moments_figure(result, os.path.join(cfg.output_dir, "moments.png"))
    print(f"wrote {out}")
    return 0


def _run_simulate(cfg: RunConfig, render: bool) -> int:
    model, policy = cfg.build_model(), cfg.build_policy()
    grid = GridSpec(cfg.m, model.delay, cfg.horizon)
    lattice = generate_lattice(model, cfg.horizon, cfg.m, cfg.master_seed,
                               cfg.path_index)
    traj = simulate(model, policy, grid, lattice.increments)
    out = os.path.join(cfg.output_dir, "trajectory.csv")
    m = grid.steps_per_delay
    with open(out, "w", encoding="utf-8", newline="") as fh:
        heads = ",".join(f"X_{j + 1}" for j in range(model.state_dim))
        fh.write(f"k,t,{heads}\n")
        for i, t in enumerate(traj.times()):
            row = ",".join(_fmt(v) for v in traj.grid_values[i])
            fh.write(f"{i - m},{_fmt(t)},{row}\n")
    print(f"simulated path {cfg.path_index}: {grid.total_steps} steps, "
          f"{traj.truncation_events} truncation events")
    if render:
        plots.trajectory_figure(traj, os.path.join(cfg.output_dir, "trajectory.png"))
    print(f"wrote {out}")
    return 0


def _checks_for(cfg: RunConfig, model) -> list:
    reports = []
    if cfg.model_id == "example36":
        params = Example36Params(**cfg.model_params)
        reports.append(conditions.check_khasminskii(
            model, conditions.khasminskii_constants_36(params),
            cfg.box_radius, cfg.n_samples, cfg.master_seed))
    else:
        params = Example55Params(**cfg.model_params)
        reports.append(conditions.check_strong_khasminskii(
            model, conditions.strong_constants_55(params, cfg.p_bar),
            cfg.box_radius, cfg.n_samples, cfg.master_seed))
        reports.append(conditions.check_monotonicity(
            model, conditions.monotonicity_constants_55(params),
            cfg.box_radius, cfg.n_samples, cfg.master_seed))
        reports.append(conditions.check_poly_lipschitz(
            model, conditions.poly_lipschitz_constants_55(params),
            cfg.box_radius, cfg.n_samples, cfg.master_seed))
    if model.holder is not None:
        k3, gamma = model.holder
        reports.append(conditions.check_holder_initial(
            model.initial, model.delay, k3, gamma, cfg.n_samples, cfg.master_seed))
    return reports


def _run_check(cfg: RunConfig) -> int:
    model = cfg.build_model()
    reports = _checks_for(cfg, model)
    out = os.path.join(cfg.output_dir, "checks.csv")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["assumption", "passed", "worst_margin", "witness",
                         "n_samples", "box_radius"])
        for rep in reports:
            writer.writerow([rep.name, rep.passed, _fmt(rep.worst_margin),
                             repr(rep.witness), rep.n_samples, _fmt(rep.box_radius)])
    for rep in reports:
        print(rep.summary())
    print(f"wrote {out}")
    return 0 if all(r.passed for r in reports) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sddelab",
        description="Truncated explicit scheme and Monte Carlo studies for "
                    "delay equations with superlinear coefficients.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a config entry (dotted keys descend, "
                             "e.g. model.a3=2); repeatable")
    parser.add_argument("--output", help="output directory (default from config)")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--threads", type=int,
                        help="worker processes, 0 = auto; affects speed only")
    parser.add_argument("--no-plots", action="store_true",
                        help="skip PNG rendering next to the CSV outputs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config_file(args.config) if args.config else {}
        raw["command"] = args.command
        for assignment in args.overrides:
            apply_override(raw, assignment)
        if args.output is not None:
            raw["output_dir"] = args.output
        if args.seed is not None:
            raw["master_seed"] = args.seed
        if args.threads is not None:
            raw["threads"] = args.threads
        cfg = parse_config(raw)
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_manifest(cfg)
        render = not args.no_plots
        if cfg.command == "check":
            return _run_check(cfg)
        if cfg.command == "converge":
            return _run_converge(cfg, render)
        if cfg.command == "gap":
            return _run_gap(cfg, render)
        if cfg.command == "moments":
            return _run_moments(cfg, render)
        return _run_simulate(cfg, render)
    except (ConfigError, ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
