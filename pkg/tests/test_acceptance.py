"""End-to-end acceptance runs for the whole laboratory.

Each test prints one visible summary line with the measured quantities
so a full run reads as a nine-line scoreboard.  Settings are frozen
(seeds included) so the numbers are reproducible byte for byte.
"""

import json
import time

import numpy as np

from sddelab import (Example36Params, Example55Params, ExperimentPlan,
                     GridSpec, KhasminskiiConstants, SddeModel,
                     StrongMomentConstants, brownian_value, check_khasminskii,
                     check_monotonicity, check_strong_khasminskii, cli,
                     constant_initial, estimate_strong_errors,
                     estimate_sup_moment, example36_growth_bound,
                     example55_growth_bound, fit_rate, gap_study,
                     generate_lattice, khasminskii_constants_36,
                     make_example_36, make_example_55, make_power_law_policy,
                     pi_delta, simulate, simulate_classical_em,
                     truncated_coeffs, truncation_radius, zero_gap_weight)

NOOP_POLICY = make_power_law_policy(1e-9, 1.0, 0.25, delta_star_override=1.0)


def _report(capsys, number: int, ok: bool, detail: str):
    with capsys.disabled():
        state = "PASS" if ok else "FAIL"
        print(f"\nACCEPTANCE {number}: {state} - {detail}")


def _kendall_tau(values) -> float:
    """Pairwise-sign rank correlation against the index order; ties count 0."""
    n = len(values)
    num = 0
    for i in range(n):
        for j in range(i + 1, n):
            d = values[j] - values[i]
            num += (d > 0) - (d < 0)
    return num / (n * (n - 1) / 2)


def test_acceptance_1_coupling_exact_for_additive_noise(capsys):
    # pure Brownian state: every grid must reproduce the reference exactly,
    # so any err_2 above rounding scale means the lattices are not coupled
    model = SddeModel(1, 1, lambda x, y: 0.0, lambda x, y: 1.0,
                      1.0, constant_initial(0.0))
    start = time.perf_counter()
    plan = ExperimentPlan(model, NOOP_POLICY, 1.0, (8, 16, 32, 64), 1024,
                          (2.0,), 100, master_seed=1)
    table = estimate_strong_errors(plan, threads=1)
    elapsed = time.perf_counter() - start
    worst = max(row.err_q for row in table.rows)
    ok = worst <= 1e-14 and elapsed < 1.0
    _report(capsys, 1, ok,
            f"coupled-lattice worst err_2 {worst:.3e} <= 1e-14, {elapsed:.2f}s < 1s")
    assert worst <= 1e-14
    assert elapsed < 1.0


def test_acceptance_2_closed_form_delay_drift(capsys):
    # drift reads only the delayed value, constant over [0, 1], so the
    # scheme should land on 3 + 0.5 B(1) up to float accumulation per path
    model = SddeModel(1, 1, lambda x, y: 2.0 * y, lambda x, y: 0.5,
                      1.0, constant_initial(1.0))
    start = time.perf_counter()
    worst = 0.0
    for m in (8, 16, 32, 64):
        grid = GridSpec(m, 1.0, 1.0)
        for path in range(25):
            lat = generate_lattice(model, 1.0, m, master_seed=2, path_index=path)
            traj = simulate(model, NOOP_POLICY, grid, lat.increments)
            expected = 3.0 + 0.5 * float(brownian_value(lat, m)[0])
            worst = max(worst, abs(traj.grid_values[-1, 0] - expected))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    _report(capsys, 2, ok,
            f"closed-form worst per-path error {worst:.3e} <= 1e-12, "
            f"{elapsed:.2f}s < 1s")
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_acceptance_3_strong_rate_near_order_one(capsys):
    # decaying cubic model with smooth constant history; self-convergence
    # against a 4096-step reference should show close to first-order decay
    model = make_example_55(Example55Params(0.0, 0.0, 1.0, 0.0, 0.5),
                            initial=1.0)
    policy = make_power_law_policy(1.0, 3.0, 0.05, delta_star_override=1.0)
    start = time.perf_counter()
    plan = ExperimentPlan(model, policy, 1.0, (8, 16, 32, 64, 128), 4096,
                          (2.0,), 2000, master_seed=11)
    table = estimate_strong_errors(plan, threads=1)
    elapsed = time.perf_counter() - start
    report = fit_rate(table, 2.0)
    ok = report.slope >= 0.8 and report.r_squared >= 0.95 and elapsed <= 300.0
    _report(capsys, 3, ok,
            f"strong-rate slope {report.slope:.3f} >= 0.8, "
            f"r2 {report.r_squared:.3f} >= 0.95, "
            f"{elapsed:.1f}s single-threaded <= 300s")
    assert report.slope >= 0.8
    assert report.r_squared >= 0.95
    assert elapsed <= 300.0


def test_acceptance_4_step_continuous_gap_scales_with_step(capsys):
    # max-over-t mean squared gap between the interpolant and the step
    # process; with rho = 0.25 the log-log slope should clear 0.4
    params = Example36Params(1.0, 1.0, 1.0, 0.5, 0.5)
    model = make_example_36(params)
    rho = 0.25
    policy = make_power_law_policy(example36_growth_bound(params), 3.0, rho,
                                   delta_star_override=1.0)
    grids = (16, 32, 64, 128, 256, 512)
    start = time.perf_counter()
    maxima = []
    for m in grids:
        table = gap_study(model, policy, GridSpec(m, 1.0, 2.0), m * 16, 2.0,
                          400, master_seed=31, threads=1)
        maxima.append(table.max_gap)
    elapsed = time.perf_counter() - start
    deltas = [1.0 / m for m in grids]
    slope = float(np.polyfit(np.log(deltas), np.log(maxima), 1)[0])
    floor = 1.0 - 2.0 * rho - 0.1
    ok = slope >= floor and elapsed <= 120.0
    _report(capsys, 4, ok,
            f"gap slope {slope:.3f} >= {floor:g}, {elapsed:.1f}s <= 120s")
    assert slope >= floor
    assert elapsed <= 120.0


def test_acceptance_5_second_moment_uniform_across_refinement(capsys):
    # halving the step six times must not inflate sup E|X|^2; each level
    # gets an independent seed so a trend cannot hide in shared noise
    model = make_example_55(Example55Params(0.0, 0.0, 1.0, 0.0, 0.5),
                            initial=1.0)
    policy = make_power_law_policy(1.0, 3.0, 0.25, delta_star_override=1.0)
    sups = []
    for j, m in enumerate((64, 128, 256, 512, 1024, 2048)):
        result = estimate_sup_moment(model, policy, GridSpec(m, 1.0, 1.0),
                                     2.0, 5000, master_seed=17 + j, threads=1)
        sups.append(result.sup_moment)
    spread = max(sups) / min(sups)
    tau = _kendall_tau(sups)
    ok = spread <= 2.0 and -0.6 <= tau <= 0.6
    _report(capsys, 5, ok,
            f"sup-moment spread {spread:.3f} <= 2, trend tau {tau:+.2f} "
            f"in [-0.6, 0.6]")
    assert spread <= 2.0
    assert -0.6 <= tau <= 0.6


def test_acceptance_6_capping_tames_cubic_blowup(capsys):
    cubic = SddeModel(1, 1, lambda x, y: -x ** 3, lambda x, y: 0.0,
                      1.0, constant_initial(3.0))
    # uncapped explicit stepping at delta 0.5 oscillates to overflow scale
    raw = simulate_classical_em(cubic, GridSpec(2, 1.0, 10.0),
                                np.zeros((20, 1)))
    raw_vals = raw.grid_values[2:, 0]
    blew_up = bool(np.any(np.abs(raw_vals[:21]) > 1e6))
    # capped stepping at the same delta stays put for ten thousand steps
    policy = make_power_law_policy(1.0, 3.0, 0.25, delta_star_override=1.0)
    grid = GridSpec(2, 1.0, 5000.0)
    tamed = simulate(cubic, policy, grid, np.zeros((grid.total_steps, 1)))
    vals = tamed.grid_values[2:, 0]
    peak = float(np.max(np.abs(vals)))
    step_peak = float(np.max(np.abs(np.diff(vals))))
    step_cap = 0.5 ** 0.75 * (1.0 + 1e-12)
    ok = blew_up and peak <= 10.0 and step_peak <= step_cap
    _report(capsys, 6, ok,
            f"uncapped >1e6 within 20 steps: {blew_up}; capped peak "
            f"{peak:.3f} <= 10 over {grid.total_steps} steps, per-step "
            f"{step_peak:.6f} <= {0.5 ** 0.75:.6f}")
    assert blew_up
    assert peak <= 10.0
    assert step_peak <= step_cap


def test_acceptance_7_checkers_pass_and_fail_correctly(capsys):
    params = Example36Params(1.0, 1.0, 1.0, 0.5, 0.5)
    good = check_khasminskii(make_example_36(params),
                             khasminskii_constants_36(params),
                             50.0, 100_000, seed=12345)
    # three deliberately broken models, each with a known worst point
    cubic_up = SddeModel(1, 1, lambda x, y: x ** 3, lambda x, y: 0.0,
                         1.0, constant_initial(0.0))
    bad1 = check_khasminskii(cubic_up, KhasminskiiConstants(1.0, 0.0, 4.0),
                             2.0, 1000, seed=7)
    quad_noise = SddeModel(1, 1, lambda x, y: 0.0, lambda x, y: x ** 2,
                           1.0, constant_initial(0.0))
    bad2 = check_strong_khasminskii(quad_noise, StrongMomentConstants(4.0, 1.0),
                                    3.0, 1000, seed=7)
    quad_drift = SddeModel(1, 1, lambda x, y: x ** 2, lambda x, y: 0.0,
                           1.0, constant_initial(0.0))
    bad3 = check_monotonicity(quad_drift, zero_gap_weight(1.0),
                              3.0, 1000, seed=7)
    ok = (good.passed
          and not bad1.passed and bad1.witness == (2.0, 0.0)
          and abs(bad1.worst_margin - (-11.0)) <= 1e-12
          and not bad2.passed and bad2.witness == (3.0, 0.0)
          and abs(bad2.worst_margin - (-111.5)) <= 1e-12
          and not bad3.passed and bad3.witness == (3.0, 0.0, 0.0, 0.0)
          and abs(bad3.worst_margin - (-18.0)) <= 1e-12)
    _report(capsys, 7, ok,
            f"population model PASS at box 50 (margin {good.worst_margin:.3g}); "
            f"counterexamples FAIL at {bad1.witness}, {bad2.witness}, "
            f"{bad3.witness}")
    assert good.passed, good.summary()
    assert not bad1.passed and bad1.witness == (2.0, 0.0)
    assert bad1.worst_margin == -11.0
    assert not bad2.passed and bad2.witness == (3.0, 0.0)
    assert bad2.worst_margin == -111.5
    assert not bad3.passed and bad3.witness == (3.0, 0.0, 0.0, 0.0)
    assert bad3.worst_margin == -18.0


def test_acceptance_8_csv_outputs_thread_independent(tmp_path, capsys):
    """Same seed, different worker counts, byte-identical CSV files."""
    converge_cfg = {
        "model": {"id": "example55", "a1": 0.0, "a2": 0.0, "a3": 1.0,
                  "a4": 0.0, "a5": 0.5},
        "policy": {"mu_a": 1.0, "mu_power": 3.0, "rho": 0.05,
                   "delta_star_override": 1.0},
        "m_list": [8, 16, 32],
        "m_ref": 256,
        "n_paths": 200,
        "master_seed": 7,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(converge_cfg), encoding="utf-8")
    blobs = []
    for threads in (1, 2, 4):
        out = tmp_path / f"converge-{threads}"
        rc = cli.main(["converge", "--config", str(cfg_path),
                       "--output", str(out), "--threads", str(threads),
                       "--no-plots"])
        assert rc == 0
        blobs.append((out / "errors.csv").read_bytes())
    converge_ok = blobs[0] == blobs[1] == blobs[2]

    moment_blobs = []
    for threads in (1, 4):
        out = tmp_path / f"moments-{threads}"
        rc = cli.main(["moments", "--set", "m=64", "--set", "n_paths=500",
                       "--seed", "7", "--output", str(out), "--threads",
                       str(threads), "--no-plots"])
        assert rc == 0
        moment_blobs.append((out / "moments.csv").read_bytes())
    moments_ok = moment_blobs[0] == moment_blobs[1]

    ok = converge_ok and moments_ok
    _report(capsys, 8, ok,
            f"errors.csv identical across threads 1/2/4: {converge_ok}; "
            f"moments.csv identical across threads 1/4: {moments_ok}")
    assert converge_ok
    assert moments_ok


def test_acceptance_9_truncation_invariants_on_grids(capsys):
    p36 = Example36Params(1.0, 1.0, 1.0, 0.5, 0.5)
    p55 = Example55Params(1.0, 1.0, 1.0, 0.5, 0.5)
    cases = [(make_example_36(p36), example36_growth_bound(p36)),
             (make_example_55(p55), example55_growth_bound(p55))]
    checked = 0
    for model, a in cases:
        policy = make_power_law_policy(a, 3.0, 0.25, delta_star_override=1.0)
        natural = make_power_law_policy(a, 3.0, 0.25).delta_star
        # radius grows as the step shrinks, never below one
        deltas = np.geomspace(natural / 100.0, natural, 50)
        radii = [truncation_radius(policy, d) for d in deltas]
        assert all(r2 < r1 for r1, r2 in zip(radii, radii[1:]))
        assert min(radii) >= 1.0
        rng = np.random.default_rng(2024)
        for delta in (natural, 1e-4):
            h = delta ** -0.25
            radius = truncation_radius(policy, delta)
            drift, diffusion = truncated_coeffs(model, policy, delta)
            pts = rng.uniform(-10.0 * radius, 10.0 * radius, size=(10_000, 2))
            for x, y in pts:
                # projection is a contraction onto the ball and idempotent
                px = pi_delta(x, radius)
                assert abs(px) <= radius * (1.0 + 1e-12)
                assert pi_delta(px, radius) == px
                # capped coefficients never outrun the per-step budget
                assert abs(drift(x, y)) <= h * (1.0 + 1e-12)
                assert abs(diffusion(x, y)) <= h * (1.0 + 1e-12)
                checked += 1
    # capping must preserve the one-sided bound that grants moment control
    model = make_example_36(p36)
    consts = khasminskii_constants_36(p36)
    a = example36_growth_bound(p36)
    policy = make_power_law_policy(a, 3.0, 0.25, delta_star_override=1.0)
    natural = make_power_law_policy(a, 3.0, 0.25).delta_star
    rng = np.random.default_rng(2024)
    preserved_worst = np.inf
    for delta in (natural, 1e-4):
        radius = truncation_radius(policy, delta)
        drift, diffusion = truncated_coeffs(model, policy, delta)
        pts = rng.uniform(-10.0 * radius, 10.0 * radius, size=(10_000, 2))
        for x, y in pts:
            lhs = x * drift(x, y) + 0.5 * diffusion(x, y) ** 2
            px, py = pi_delta(x, radius), pi_delta(y, radius)
            rhs = (2.0 * consts.K1 * (1.0 + x * x + y * y)
                   - consts.K2 * abs(px) ** consts.beta
                   + consts.K2 * abs(py) ** consts.beta)
            preserved_worst = min(preserved_worst, rhs - lhs)
    ok = preserved_worst >= -1e-9
    _report(capsys, 9, ok,
            f"{checked} capped-coefficient points within budget; preserved "
            f"one-sided bound worst margin {preserved_worst:.4f} >= -1e-9")
    assert preserved_worst >= -1e-9
