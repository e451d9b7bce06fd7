"""Unit tests for the projection machinery: power-law policies, the
truncation radius, pi_delta, and the capped coefficient pair."""

import math

import numpy as np
import pytest

from sddelab import (Example36Params, Example55Params, StepSizeError,
                     example36_growth_bound, example55_growth_bound,
                     make_example_36, make_example_55, make_power_law_policy,
                     pi_delta, truncated_coeffs, truncation_radius)
from sddelab.conditions import khasminskii_constants_36

DEFAULT_36 = Example36Params(1.0, 1.0, 1.0, 0.5, 0.5)
DEFAULT_55 = Example55Params(1.0, 1.0, 1.0, 0.5, 0.5)


def test_policy_frozen_values():
    pol = make_power_law_policy(3.0, 3.0, 0.25)
    assert pol.mu(2.0) == pytest.approx(24.0, rel=1e-15)
    assert pol.mu_inv(24.0) == pytest.approx(2.0, rel=1e-15)
    # min(1, (1 v 2^3*3)^(-1/0.25)) = 24^-4 = 1/331776
    assert pol.delta_star == pytest.approx(3.0140817901234566e-06, rel=1e-15)
    assert not pol.delta_star_overridden


def test_policy_cap_budget_covers_mu_at_two():
    # construction picks delta_star so the cap at delta_star reaches mu(2)
    for a, power, rho in [(3.0, 3.0, 0.25), (1.0, 1.0, 0.25), (0.5, 2.0, 0.1)]:
        pol = make_power_law_policy(a, power, rho)
        h_star = pol.delta_star ** (-rho)
        assert h_star >= pol.mu(2.0) - 1e-9
        assert h_star >= pol.mu(1.0)
        assert pol.delta_star <= 1.0


def test_policy_rejects_bad_rho():
    for rho in (0.5, 0.26, 0.0, -0.1):
        with pytest.raises(ValueError, match=r"\(0, 1/4\]"):
            make_power_law_policy(3.0, 3.0, rho)


def test_policy_rejects_bad_scale_and_power():
    with pytest.raises(ValueError, match="positive"):
        make_power_law_policy(0.0, 3.0, 0.25)
    with pytest.raises(ValueError, match="power"):
        make_power_law_policy(3.0, 0.5, 0.25)


def test_policy_mu_inverse_roundtrip():
    pol = make_power_law_policy(2.5, 3.0, 0.2)
    for v in np.geomspace(pol.mu(0.01), pol.mu(50.0), 40):
        assert pol.mu(pol.mu_inv(v)) == pytest.approx(v, rel=1e-9)
    # strict increase on a sampled grid
    rs = np.linspace(0.0, 20.0, 200)
    mus = [pol.mu(r) for r in rs]
    assert all(b > a for a, b in zip(mus, mus[1:]))


def test_radius_frozen_values():
    pol = make_power_law_policy(3.0, 3.0, 0.25, delta_star_override=1.0)
    # h(1e-4) = 10, radius = (10/3)^(1/3)
    assert truncation_radius(pol, 1e-4) == pytest.approx(1.4938015821857216, rel=1e-14)
    ident = make_power_law_policy(1.0, 1.0, 0.25, delta_star_override=1.0)
    assert truncation_radius(ident, 1e-4) == pytest.approx(10.0, rel=1e-14)


def test_radius_range_enforcement():
    pol = make_power_law_policy(3.0, 3.0, 0.25)
    with pytest.raises(StepSizeError, match="admissible range"):
        truncation_radius(pol, 0.5)
    with pytest.raises(StepSizeError, match="positive"):
        truncation_radius(pol, 0.0)
    over = make_power_law_policy(3.0, 3.0, 0.25, delta_star_override=1.0)
    assert truncation_radius(over, 0.5) > 0  # now admissible
    with pytest.raises(StepSizeError, match=r"\(0, 1\]"):
        truncation_radius(over, 1.5)


def test_radius_decreasing_and_at_least_one():
    pol = make_power_law_policy(3.0, 3.0, 0.25)
    deltas = np.geomspace(pol.delta_star / 100.0, pol.delta_star, 50)
    radii = [truncation_radius(pol, d) for d in deltas]
    assert all(r2 < r1 for r1, r2 in zip(radii, radii[1:]))
    assert min(radii) >= 1.0


def test_pi_delta_examples():
    out = pi_delta(np.array([3.0, 4.0]), 2.5)
    assert np.array_equal(out, np.array([1.5, 2.0]))
    assert np.array_equal(pi_delta(np.zeros(3), 7.0), np.zeros(3))
    inside = np.array([1.0, 0.0])
    assert np.array_equal(pi_delta(inside, 5.0), inside)
    assert pi_delta(5.0, 2.0) == 2.0
    assert pi_delta(-5.0, 2.0) == -2.0
    assert pi_delta(1.5, 2.0) == 1.5


def test_pi_delta_rejects_nonpositive_radius():
    with pytest.raises(ValueError, match="radius"):
        pi_delta(np.array([1.0]), 0.0)


def test_pi_delta_idempotent_and_norm_exact():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = rng.integers(1, 5)
        x = rng.normal(scale=10.0, size=n)
        r = float(rng.uniform(0.1, 8.0))
        once = pi_delta(x, r)
        assert np.array_equal(pi_delta(once, r), once)
        target = min(float(np.linalg.norm(x)), r)
        got = float(np.linalg.norm(once))
        assert got == pytest.approx(target, rel=4e-16, abs=0.0) or got <= target


def test_pi_delta_preserves_direction():
    x = np.array([2.0, -1.0, 2.0])  # norm 3
    out = pi_delta(x, 1.5)
    assert np.allclose(out, x / 2.0, rtol=1e-15)


def test_truncated_coeffs_frozen_cubic():
    model = make_example_55(Example55Params(0.0, 0.0, 1.0, 0.0, 0.0))
    pol = make_power_law_policy(3.0, 3.0, 0.25, delta_star_override=1.0)
    drift, diffusion = truncated_coeffs(model, pol, 1e-4)
    # radius^3 = h/a = 10/3, so the capped cubic is exactly -10/3
    assert drift(5.0, 0.0) == pytest.approx(-10.0 / 3.0, rel=1e-14)
    assert diffusion(5.0, 0.0) == 0.0


def test_truncated_coeffs_identity_inside_ball():
    model = make_example_36(DEFAULT_36)
    pol = make_power_law_policy(3.0, 3.0, 0.25, delta_star_override=1.0)
    drift, diffusion = truncated_coeffs(model, pol, 1e-4)
    assert drift(0.7, -0.4) == model.drift(0.7, -0.4)
    assert diffusion(0.7, -0.4) == model.diffusion(0.7, -0.4)


def test_truncated_coeffs_zero_model():
    from sddelab import SddeModel, constant_initial
    model = SddeModel(1, 1, lambda x, y: 0.0, lambda x, y: 0.0,
                      1.0, constant_initial(0.0))
    pol = make_power_law_policy(1.0, 1.0, 0.25, delta_star_override=1.0)
    drift, diffusion = truncated_coeffs(model, pol, 0.01)
    assert drift(300.0, -2.0) == 0.0 and diffusion(300.0, -2.0) == 0.0


def test_truncated_coeffs_nonfinite_reported():
    from sddelab import SddeModel, constant_initial
    bad = SddeModel(1, 1, lambda x, y: float("inf"), lambda x, y: 0.0,
                    1.0, constant_initial(0.0))
    pol = make_power_law_policy(1.0, 1.0, 0.25, delta_star_override=1.0)
    drift, _ = truncated_coeffs(bad, pol, 0.01)
    with pytest.raises(FloatingPointError, match="drift"):
        drift(1.0, 1.0)


def _sample_box(rng, half_width: float, count: int):
    pts = rng.uniform(-half_width, half_width, size=(count, 2))
    return pts


def test_coefficient_bound_on_box_all_builtin_models():
    # cap must dominate both coefficients over a box 10x the radius
    cases = [
        (make_example_36(DEFAULT_36), example36_growth_bound(DEFAULT_36)),
        (make_example_55(DEFAULT_55), example55_growth_bound(DEFAULT_55)),
    ]
    rng = np.random.default_rng(2024)
    for model, a in cases:
        pol = make_power_law_policy(a, 3.0, 0.25, delta_star_override=1.0)
        for delta in (make_power_law_policy(a, 3.0, 0.25).delta_star, 1e-4):
            h = delta ** -0.25
            radius = truncation_radius(pol, delta)
            drift, diffusion = truncated_coeffs(model, pol, delta)
            worst = 0.0
            for x, y in _sample_box(rng, 10.0 * radius, 10_000):
                worst = max(worst, abs(drift(x, y)), abs(diffusion(x, y)))
            assert worst <= h * (1.0 + 1e-12)


def test_preserved_dissipativity_inequality():
    # capping must not break the one-sided bound that grants moment control
    model = make_example_36(DEFAULT_36)
    consts = khasminskii_constants_36(DEFAULT_36)
    a = example36_growth_bound(DEFAULT_36)
    pol = make_power_law_policy(a, 3.0, 0.25, delta_star_override=1.0)
    rng = np.random.default_rng(2024)
    for delta in (make_power_law_policy(a, 3.0, 0.25).delta_star, 1e-4):
        radius = truncation_radius(pol, delta)
        drift, diffusion = truncated_coeffs(model, pol, delta)
        worst = math.inf
        for x, y in _sample_box(rng, 10.0 * radius, 10_000):
            lhs = x * drift(x, y) + 0.5 * diffusion(x, y) ** 2
            px, py = pi_delta(x, radius), pi_delta(y, radius)
            rhs = (2.0 * consts.K1 * (1.0 + x * x + y * y)
                   - consts.K2 * abs(px) ** consts.beta
                   + consts.K2 * abs(py) ** consts.beta)
            worst = min(worst, rhs - lhs)
        assert worst >= -1e-9
