"""Delay models with polynomially growing coefficients.

A model couples the current state x = X(t) and the delayed state
y = X(t - tau) through a drift f(x, y) and a diffusion g(x, y).  Scalar
models (state_dim == noise_dim == 1) work in plain floats end to end;
higher-dimensional models use 1-d state vectors and (n, m) diffusion
matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union


@dataclass(frozen=True)
class SddeModel:
    """A delay equation dX = f(X(t), X(t-tau)) dt + g(X(t), X(t-tau)) dB.

    drift and diffusion must be pure functions of (x, y).  For scalar
    models they take and return floats; for vector models they take two
    (state_dim,) arrays and return a (state_dim,) vector and a
    (state_dim, noise_dim) matrix respectively.  initial is the history
    segment, defined on [-tau, 0].  holder optionally records (K3, gamma)
    with |initial(u) - initial(v)| <= K3 |u - v|**gamma, used by the
    initial-data regularity check and the rate experiments.
    """

    state_dim: int
    noise_dim: int
    drift: Callable
    diffusion: Callable
    delay: float
    initial: Callable
    holder: Optional[tuple] = None

    def __post_init__(self):
        if self.state_dim < 1 or self.state_dim != int(self.state_dim):
            raise ValueError(f"state_dim must be a positive integer, got {self.state_dim}")
        if self.noise_dim < 1 or self.noise_dim != int(self.noise_dim):
            raise ValueError(f"noise_dim must be a positive integer, got {self.noise_dim}")
        if not (self.delay > 0):
            raise ValueError(f"delay must be positive, got {self.delay}")
        if self.holder is not None:
            k3, gamma = self.holder
            if k3 < 0:
                raise ValueError(f"holder constant must be >= 0, got {k3}")
            if not (0 < gamma <= 1):
                raise ValueError(f"holder exponent must lie in (0, 1], got {gamma}")

    @property
    def scalar(self) -> bool:
        return self.state_dim == 1 and self.noise_dim == 1


def constant_initial(value: float) -> Callable[[float], float]:
    """History segment frozen at a single value."""
    v = float(value)
    return lambda u: v


def _resolve_initial(initial, holder):
    # A bare number means a constant history, which is 0-Holder-continuous
    # with any exponent; (0, 1) is the canonical certificate for it.
    if initial is None:
        initial = 1.0
    if isinstance(initial, (int, float)):
        if holder is None:
            holder = (0.0, 1.0)
        return constant_initial(initial), holder
    return initial, holder


@dataclass(frozen=True)
class Example36Params:
    """Coefficients of the scalar population model

        f(x, y) = x (a1 + a2 y - a3 x^2),   g(x, y) = x (a4 x + a5 y).

    All coefficients are nonnegative and the cubic damping must dominate
    the quadratic noise: a3 > a4^2 + a5^2.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a5"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        bound = self.a4 ** 2 + self.a5 ** 2
        if not (self.a3 > bound):
            raise ValueError(
                f"damping too weak: need a3 > a4^2 + a5^2, got a3={self.a3} "
                f"vs a4^2 + a5^2 = {bound}"
            )


@dataclass(frozen=True)
class Example55Params:
    """Coefficients of the scalar model

        f(x, y) = a1 + a2 |y|^(4/3) - a3 x^3,   g(x, y) = a4 |x|^(3/2) + a5 y,

    with cubic damping a3 > 0; the other coefficients may take any sign.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float

    def __post_init__(self):
        if not (self.a3 > 0):
            raise ValueError(f"need a3 > 0 for the cubic damping, got a3={self.a3}")


def example36_growth_bound(params: Example36Params) -> float:
    """Scale a with sup_{|x| v |y| <= r} (|f| v |g|) <= a r^3 for r >= 1."""
    return max(params.a1 + params.a2 + params.a3, params.a4 + params.a5)


def example55_growth_bound(params: Example55Params) -> float:
    """Scale a with sup_{|x| v |y| <= r} (|f| v |g|) <= a r^3 for r >= 1."""
    return max(abs(params.a1) + abs(params.a2) + params.a3,
               abs(params.a4) + abs(params.a5))


def make_example_36(params: Example36Params, tau: float = 1.0,
                    initial=None, holder=None) -> SddeModel:
    """Population model with cubic self-limitation and state-proportional noise."""
    a1, a2, a3, a4, a5 = params.a1, params.a2, params.a3, params.a4, params.a5

    def drift(x, y):
        return x * (a1 + a2 * y - a3 * x * x)

    def diffusion(x, y):
        return x * (a4 * x + a5 * y)

    xi, holder = _resolve_initial(initial, holder)
    return SddeModel(1, 1, drift, diffusion, float(tau), xi, holder)


def make_example_55(params: Example55Params, tau: float = 1.0,
                    initial=None, holder=None) -> SddeModel:
    """Cubic-damping model driven by fractional powers of both arguments."""
    a1, a2, a3, a4, a5 = params.a1, params.a2, params.a3, params.a4, params.a5
    four_thirds = 4.0 / 3.0

    def drift(x, y):
        return a1 + a2 * abs(y) ** four_thirds - a3 * x ** 3

    def diffusion(x, y):
        return a4 * abs(x) ** 1.5 + a5 * y

    xi, holder = _resolve_initial(initial, holder)
    return SddeModel(1, 1, drift, diffusion, float(tau), xi, holder)


# String ids for the CLI; parameter defaults match the worked constants
# used throughout the test fixtures.
_PARAM_NAMES = ("a1", "a2", "a3", "a4", "a5")
_DEFAULT_PARAMS = {
    "example36": {"a1": 1.0, "a2": 1.0, "a3": 1.0, "a4": 0.5, "a5": 0.5},
    "example55": {"a1": 1.0, "a2": 1.0, "a3": 1.0, "a4": 0.5, "a5": 0.5},
}
MODEL_IDS = tuple(sorted(_DEFAULT_PARAMS))


def resolve_params(model_id: str, overrides: dict) -> dict:
    if model_id not in _DEFAULT_PARAMS:
        raise ValueError(f"unknown model id {model_id!r}; known ids: {', '.join(MODEL_IDS)}")
    params = dict(_DEFAULT_PARAMS[model_id])
    for key, value in overrides.items():
        if key not in _PARAM_NAMES:
            raise ValueError(f"unknown parameter {key!r} for model {model_id!r}; "
                             f"expected one of {', '.join(_PARAM_NAMES)}")
        params[key] = float(value)
    return params


def make_model(model_id: str, params: dict, tau: float = 1.0,
               initial=None, holder=None) -> SddeModel:
    """Build a registered model from its string id and a parameter map."""
    full = resolve_params(model_id, params)
    if model_id == "example36":
        return make_example_36(Example36Params(**full), tau, initial, holder)
    return make_example_55(Example55Params(**full), tau, initial, holder)


def model_growth_bound(model_id: str, params: dict) -> float:
    full = resolve_params(model_id, params)
    if model_id == "example36":
        return example36_growth_bound(Example36Params(**full))
    return example55_growth_bound(Example55Params(**full))
