"""Coefficient truncation for explicit schemes on superlinear problems.

A policy carries a strictly increasing dominator mu with
sup_{|x| v |y| <= r} (|f| v |g|) <= mu(r) for r >= 1, and a step-size
cap h(delta) = delta**(-rho).  At step size delta both coefficient
arguments are projected onto the centered ball of radius
mu_inv(h(delta)) before f and g are evaluated, which caps the truncated
coefficients at h(delta) while leaving the dynamics untouched wherever
the state already lives inside the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class StepSizeError(ValueError):
    """Step size outside the policy's admissible range."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Dominator pair (mu, mu_inv), cap exponent rho, and admissible range.

    delta_star is the largest admissible step size; runs with
    delta > delta_star are refused unless delta_star_overridden is set,
    in which case any delta <= 1 is accepted (useful for experiments at
    moderate step sizes, at the cost of the radius >= 1 guarantee).
    mu_a/mu_power record the power-law parameters when the policy came
    from make_power_law_policy, for config round-trips.
    """

    mu: Callable[[float], float]
    mu_inv: Callable[[float], float]
    h_exponent: float
    delta_star: float
    delta_star_overridden: bool = False
    mu_a: Optional[float] = None
    mu_power: Optional[float] = None

    def h(self, delta: float) -> float:
        """Coefficient cap at step size delta."""
        return delta ** (-self.h_exponent)


def make_power_law_policy(a: float, power: float, rho: float,
                          delta_star_override: float | None = None) -> TruncationPolicy:
    """Policy for the dominator mu(r) = a * r**power.

    Requires a > 0, power >= 1 and 0 < rho <= 1/4 (the cap h(delta) =
    delta**(-rho) then satisfies delta**(1/4) * h(delta) <= 1 for
    delta <= 1).  delta_star is chosen so h(delta_star) >= mu(2), hence
    the truncation radius is at least 2 on the admissible range.
    """
    if not (a > 0):
        raise ValueError(f"dominator scale must be positive, got a={a}")
    if not (power >= 1):
        raise ValueError(f"dominator power must be >= 1, got power={power}")
    if not (0 < rho <= 0.25):
        raise ValueError(f"cap exponent rho must lie in (0, 1/4], got rho={rho}")

    def mu(r: float) -> float:
        return a * r ** power

    def mu_inv(v: float) -> float:
        return (v / a) ** (1.0 / power)

    delta_star = min(1.0, max(1.0, 2.0 ** power * a) ** (-1.0 / rho))
    if delta_star_override is None:
        return TruncationPolicy(mu, mu_inv, rho, delta_star, False, a, power)
    if not (0 < delta_star_override <= 1):
        raise ValueError(
            f"delta_star_override must lie in (0, 1], got {delta_star_override}")
    return TruncationPolicy(mu, mu_inv, rho, float(delta_star_override), True, a, power)


def truncation_radius(policy: TruncationPolicy, delta: float) -> float:
    """Projection radius mu_inv(h(delta)) used at step size delta."""
    if not (delta > 0):
        raise StepSizeError(f"step size must be positive, got delta={delta}")
    if delta > policy.delta_star:
        if not policy.delta_star_overridden:
            raise StepSizeError(
                f"delta={delta} exceeds the admissible range (0, {policy.delta_star}]; "
                f"refine the grid or build the policy with a delta_star override")
        if delta > 1.0:
            raise StepSizeError(
                f"delta={delta} exceeds the overridden admissible range (0, 1]")
    return policy.mu_inv(policy.h(delta))


def pi_delta(x, radius: float):
    """Project x onto the centered ball of the given radius.

    Scalars clamp exactly.  Vectors scale by radius/|x| and re-verify so
    the returned point's norm never exceeds the radius, which makes the
    projection exactly idempotent; the zero vector maps to itself.
    Points already inside the ball are returned unchanged.
    """
    if not (radius > 0):
        raise ValueError(f"projection radius must be positive, got {radius}")
    if isinstance(x, float) or np.ndim(x) == 0:
        v = float(x)
        return v if -radius <= v <= radius else math.copysign(radius, v)
    p = np.asarray(x, dtype=float)
    # Rounding in the one-shot rescale can overshoot by an ulp, so repeat
    # until the recomputed norm actually sits inside the ball.
    for _ in range(8):
        nrm = math.sqrt(float(np.dot(p, p)))
        if nrm <= radius:
            return p
        p = p * (radius / nrm)
    return p


def truncated_coeffs(model, policy: TruncationPolicy, delta: float):
    """Drift/diffusion with both arguments projected to the step's ball.

    Returns a pair of callables with the same calling convention as the
    model's raw coefficients.  Non-finite coefficient values raise,
    naming the offending arguments.
    """
    radius = truncation_radius(policy, delta)
    f, g = model.drift, model.diffusion

    def _check(value, label, x, y):
        if not np.all(np.isfinite(value)):
            raise FloatingPointError(
                f"{label} produced a non-finite value at truncated arguments "
                f"x={x!r}, y={y!r} (radius {radius})")
        return value

    def drift(x, y):
        px, py = pi_delta(x, radius), pi_delta(y, radius)
        return _check(f(px, py), "drift", px, py)

    def diffusion(x, y):
        px, py = pi_delta(x, radius), pi_delta(y, radius)
        return _check(g(px, py), "diffusion", px, py)

    return drift, diffusion
