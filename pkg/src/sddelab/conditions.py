"""Sampled verification of the structural conditions the theory needs.

Each check evaluates its inequality's margin (right side minus left
side) on a deterministic point set plus seeded uniform samples in a box,
and fails if the worst margin dips below a small relative tolerance.
A passing report is evidence, not proof; a failing report is a genuine
counterexample, carried back as the witness.

Samples are nested by construction: the unit-box draw depends only on
(seed, count, dimension), and the box radius just scales it.  A failure
found at radius b therefore persists at any larger radius with the same
seed, which the tests assert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# Relative slack on the pass threshold: margin >= -PASS_TOL * (1 + |rhs|).
PASS_TOL = 1e-9
_MAX_ENUMERATED_CORNERS = 64


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    worst_margin: float
    witness: tuple
    n_samples: int
    box_radius: float

    def summary(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (f"{self.name:<24} {state}  worst_margin={self.worst_margin:.6g}  "
                f"witness={self.witness!r}  n={self.n_samples}  box={self.box_radius:g}")


@dataclass(frozen=True)
class KhasminskiiConstants:
    """x.f + |g|^2/2 <= K1 (1 + |x|^2 + |y|^2) - K2 |x|^beta + K2 |y|^beta."""

    K1: float
    K2: float
    beta: float

    def __post_init__(self):
        if not (self.K1 > 0):
            raise ValueError(f"K1 must be positive, got {self.K1}")
        if self.K2 < 0:
            raise ValueError(f"K2 must be nonnegative, got {self.K2}")
        if not (self.beta > 2):
            raise ValueError(f"beta must exceed 2, got {self.beta}")


@dataclass(frozen=True)
class StrongMomentConstants:
    """x.f + (p_bar - 1)/2 |g|^2 <= K1 (1 + |x|^2 + |y|^2)."""

    p_bar: float
    K1: float

    def __post_init__(self):
        if not (self.p_bar > 2):
            raise ValueError(f"p_bar must exceed 2, got {self.p_bar}")
        if not (self.K1 > 0):
            raise ValueError(f"K1 must be positive, got {self.K1}")


@dataclass(frozen=True)
class MonotonicityConstants:
    """(x-xb).(f-fb) + (1+alpha)/2 |g-gb|^2
           <= H (|x-xb|^2 + |y-yb|^2) - U(x, xb) + U(y, yb).

    alpha = 0 encodes the basic variant of the condition; alpha > 0 the
    strengthened one.  U must vanish on the diagonal and be dominated by
    kappa_of_b(b) * |x-xb|^2 on the box of radius b.
    """

    H: float
    alpha: float
    U: Callable[[float, float], float]
    kappa_of_b: Callable[[float], float]

    def __post_init__(self):
        if self.H < 0:
            raise ValueError(f"H must be nonnegative, got {self.H}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")


def zero_gap_weight(H: float, alpha: float = 0.0) -> MonotonicityConstants:
    """Monotonicity constants with no gap weight (U identically zero)."""
    return MonotonicityConstants(H=H, alpha=alpha, U=lambda x, xb: 0.0,
                                 kappa_of_b=lambda b: 0.0)


@dataclass(frozen=True)
class PolyLipschitzConstants:
    """|f-fb|^2 v |g-gb|^2
           <= H3 (|x-xb|^2 + |y-yb|^2)(1 + |x|^r + |xb|^r + |y|^r + |yb|^r)."""

    H3: float
    r: float

    def __post_init__(self):
        if not (self.H3 > 0):
            raise ValueError(f"H3 must be positive, got {self.H3}")
        if self.r < 0:
            raise ValueError(f"r must be nonnegative, got {self.r}")


def _deterministic_unit_points(dim: int) -> np.ndarray:
    """Origin, +/- axis points, then corner sign patterns (capped)."""
    points = [np.zeros(dim)]
    eye = np.eye(dim)
    points.extend(eye[i] for i in range(dim))
    points.extend(-eye[i] for i in range(dim))
    n_corners = min(2 ** dim, _MAX_ENUMERATED_CORNERS)
    for code in range(n_corners):
        signs = np.array([1.0 if (code >> i) & 1 == 0 else -1.0 for i in range(dim)])
        points.append(signs)
    return np.array(points)


def _sample_box(dim: int, box_radius: float, n_samples: int, seed: int) -> np.ndarray:
    """Deterministic points plus seeded uniforms, all scaled by box_radius."""
    if not (box_radius > 0):
        raise ValueError(f"box_radius must be positive, got {box_radius}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    unit = rng.uniform(-1.0, 1.0, size=(int(n_samples), dim))
    return np.vstack([_deterministic_unit_points(dim), unit]) * box_radius


def _split(row: np.ndarray, n: int, parts: int):
    if n == 1:
        return tuple(float(row[i]) for i in range(parts))
    return tuple(row[i * n:(i + 1) * n] for i in range(parts))


def _sqnorm(v) -> float:
    if isinstance(v, float):
        return v * v
    a = np.asarray(v, dtype=float)
    return float(np.dot(a.ravel(), a.ravel()))


def _dot(u, v) -> float:
    if isinstance(u, float):
        return u * float(v)
    return float(np.dot(np.asarray(u, float).ravel(), np.asarray(v, float).ravel()))


def _report(name, margins, rhs, witnesses, box_radius) -> CheckReport:
    idx = int(np.argmin(margins))
    worst = float(margins[idx])
    passed = worst >= -PASS_TOL * (1.0 + abs(float(rhs[idx])))
    return CheckReport(name, passed, worst, witnesses[idx],
                       len(margins), float(box_radius))


def check_khasminskii(model, constants: KhasminskiiConstants, box_radius: float,
                      n_samples: int, seed: int) -> CheckReport:
    """Dissipativity with a delayed compensation term, sampled on the box."""
    n = model.state_dim
    rows = _sample_box(2 * n, box_radius, n_samples, seed)
    k1, k2, beta = constants.K1, constants.K2, constants.beta
    margins = np.empty(len(rows))
    rhs_vals = np.empty(len(rows))
    witnesses = []
    for i, row in enumerate(rows):
        x, y = _split(row, n, 2)
        lhs = _dot(x, model.drift(x, y)) + 0.5 * _sqnorm(model.diffusion(x, y))
        nx2, ny2 = _sqnorm(x), _sqnorm(y)
        rhs = (k1 * (1.0 + nx2 + ny2)
               - k2 * nx2 ** (beta / 2.0) + k2 * ny2 ** (beta / 2.0))
        margins[i] = rhs - lhs
        rhs_vals[i] = rhs
        witnesses.append((x, y))
    return _report("khasminskii", margins, rhs_vals, witnesses, box_radius)


def check_strong_khasminskii(model, constants: StrongMomentConstants,
                             box_radius: float, n_samples: int, seed: int) -> CheckReport:
    """Moment condition at order p_bar, sampled on the box."""
    n = model.state_dim
    rows = _sample_box(2 * n, box_radius, n_samples, seed)
    k1, w = constants.K1, 0.5 * (constants.p_bar - 1.0)
    margins = np.empty(len(rows))
    rhs_vals = np.empty(len(rows))
    witnesses = []
    for i, row in enumerate(rows):
        x, y = _split(row, n, 2)
        lhs = _dot(x, model.drift(x, y)) + w * _sqnorm(model.diffusion(x, y))
        rhs = k1 * (1.0 + _sqnorm(x) + _sqnorm(y))
        margins[i] = rhs - lhs
        rhs_vals[i] = rhs
        witnesses.append((x, y))
    return _report("strong_khasminskii", margins, rhs_vals, witnesses, box_radius)


def _clip_to_ball(row: np.ndarray, n: int, radius: float) -> np.ndarray:
    if n == 1:
        return row
    out = row.copy()
    for i in range(len(row) // n):
        seg = out[i * n:(i + 1) * n]
        nrm = math.sqrt(float(np.dot(seg, seg)))
        if nrm > radius:
            seg *= radius / nrm
    return out


def check_local_lipschitz(model, radius: float, K_R: float,
                          n_pairs: int, seed: int) -> CheckReport:
    """Squared-increment Lipschitz bound on the ball of the given radius."""
    if not (K_R > 0):
        raise ValueError(f"K_R must be positive, got {K_R}")
    n = model.state_dim
    rows = _sample_box(4 * n, radius, n_pairs, seed)
    margins = np.empty(len(rows))
    rhs_vals = np.empty(len(rows))
    witnesses = []
    for i, row in enumerate(rows):
        x, y, xb, yb = _split(_clip_to_ball(row, n, radius), n, 4)
        df = np.asarray(model.drift(x, y), float) - np.asarray(model.drift(xb, yb), float)
        dg = np.asarray(model.diffusion(x, y), float) - np.asarray(model.diffusion(xb, yb), float)
        lhs = max(_sqnorm(df), _sqnorm(dg))
        rhs = K_R * (_sqnorm(_sub(x, xb)) + _sqnorm(_sub(y, yb)))
        margins[i] = rhs - lhs
        rhs_vals[i] = rhs
        witnesses.append((x, y, xb, yb))
    return _report("local_lipschitz", margins, rhs_vals, witnesses, radius)


def _sub(u, v):
    if isinstance(u, float):
        return u - v
    return np.asarray(u, float) - np.asarray(v, float)


def check_holder_initial(initial: Callable, delay: float, K3: float, gamma: float,
                         n_pairs: int, seed: int) -> CheckReport:
    """Holder continuity of the history segment on [-delay, 0]."""
    if K3 < 0:
        raise ValueError(f"K3 must be nonnegative, got {K3}")
    if not (0 < gamma <= 1):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if not (delay > 0):
        raise ValueError(f"delay must be positive, got {delay}")
    rng = np.random.default_rng(seed)
    det = np.array([[0.0, -delay], [-delay, 0.0], [0.0, 0.0],
                    [-delay, -delay], [0.0, -0.5 * delay], [-0.5 * delay, -delay]])
    rand = rng.uniform(-delay, 0.0, size=(int(n_pairs), 2))
    pairs = np.vstack([det, rand])
    margins = np.empty(len(pairs))
    rhs_vals = np.empty(len(pairs))
    witnesses = []
    for i, (u, v) in enumerate(pairs):
        du = initial(float(u))
        dv = initial(float(v))
        gap = math.sqrt(_sqnorm(_sub(np.asarray(du, float), np.asarray(dv, float))))
        rhs = K3 * abs(u - v) ** gamma
        margins[i] = rhs - gap
        rhs_vals[i] = rhs
        witnesses.append((float(u), float(v)))
    return _report("holder_initial", margins, rhs_vals, witnesses, delay)


def check_monotonicity(model, constants: MonotonicityConstants, box_radius: float,
                       n_samples: int, seed: int) -> CheckReport:
    """One-sided increment bound with the gap weight U, sampled on the box.

    Also validates U itself on the sampled points: U(x, x) must vanish
    and U(x, xb) must stay below kappa_of_b(box_radius) |x - xb|^2.
    """
    n = model.state_dim
    rows = _sample_box(4 * n, box_radius, n_samples, seed)
    H, weight = constants.H, 0.5 * (1.0 + constants.alpha)
    kappa = constants.kappa_of_b(float(box_radius))
    margins = np.empty(len(rows))
    rhs_vals = np.empty(len(rows))
    witnesses = []
    for i, row in enumerate(rows):
        x, y, xb, yb = _split(row, n, 4)
        uxx = constants.U(x, x)
        if abs(uxx) > 1e-12 * (1.0 + abs(kappa)):
            raise ValueError(f"gap weight U does not vanish on the diagonal: U(x,x)={uxx} at x={x!r}")
        dx2 = _sqnorm(_sub(x, xb))
        u_val = constants.U(x, xb)
        if u_val > kappa * dx2 + 1e-9 * (1.0 + abs(kappa * dx2)):
            raise ValueError(
                f"gap weight exceeds its quadratic cap: U={u_val} vs "
                f"kappa*|x-xb|^2={kappa * dx2} at x={x!r}, xb={xb!r}")
        dy2 = _sqnorm(_sub(y, yb))
        df = _sub(np.asarray(model.drift(x, y), float),
                  np.asarray(model.drift(xb, yb), float))
        dg = _sub(np.asarray(model.diffusion(x, y), float),
                  np.asarray(model.diffusion(xb, yb), float))
        lhs = _dot(_sub(x, xb), df) + weight * _sqnorm(dg)
        rhs = H * (dx2 + dy2) - u_val + constants.U(y, yb)
        margins[i] = rhs - lhs
        rhs_vals[i] = rhs
        witnesses.append((x, y, xb, yb))
    return _report("monotonicity", margins, rhs_vals, witnesses, box_radius)


def check_poly_lipschitz(model, constants: PolyLipschitzConstants, box_radius: float,
                         n_samples: int, seed: int) -> CheckReport:
    """Polynomially weighted Lipschitz bound, sampled on the box."""
    n = model.state_dim
    rows = _sample_box(4 * n, box_radius, n_samples, seed)
    h3, r = constants.H3, constants.r
    margins = np.empty(len(rows))
    rhs_vals = np.empty(len(rows))
    witnesses = []
    for i, row in enumerate(rows):
        x, y, xb, yb = _split(row, n, 4)
        df = _sub(np.asarray(model.drift(x, y), float),
                  np.asarray(model.drift(xb, yb), float))
        dg = _sub(np.asarray(model.diffusion(x, y), float),
                  np.asarray(model.diffusion(xb, yb), float))
        lhs = max(_sqnorm(df), _sqnorm(dg))
        poly = 1.0 + sum(_sqnorm(v) ** (r / 2.0) for v in (x, xb, y, yb))
        rhs = h3 * (_sqnorm(_sub(x, xb)) + _sqnorm(_sub(y, yb))) * poly
        margins[i] = rhs - lhs
        rhs_vals[i] = rhs
        witnesses.append((x, y, xb, yb))
    return _report("poly_lipschitz", margins, rhs_vals, witnesses, box_radius)


def maximize_on_ray(fn: Callable[[float], float], u_max: float,
                    tol: float = 1e-10, scan_points: int = 2048) -> float:
    """max of fn over [0, u_max] for eventually decreasing unimodal-ish fn.

    A coarse scan brackets the best point, golden-section refines it.
    """
    if not (u_max > 0):
        raise ValueError(f"u_max must be positive, got {u_max}")
    us = np.linspace(0.0, u_max, int(scan_points))
    vals = np.array([fn(float(u)) for u in us])
    i = int(np.argmax(vals))
    lo = us[max(i - 1, 0)]
    hi = us[min(i + 1, len(us) - 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    m1 = b - inv_phi * (b - a)
    m2 = a + inv_phi * (b - a)
    f1, f2 = fn(m1), fn(m2)
    while b - a > tol:
        if f1 < f2:
            a, m1, f1 = m1, m2, f2
            m2 = a + inv_phi * (b - a)
            f2 = fn(m2)
        else:
            b, m2, f2 = m2, m1, f1
            m1 = b - inv_phi * (b - a)
            f1 = fn(m1)
    return max(float(vals[i]), fn(0.5 * (a + b)))


# Derived constants for the built-in models.  Each helper returns values
# for which the corresponding inequality provably holds everywhere, so
# the sampled checks on these are regression tests of the derivations.

def khasminskii_constants_36(params) -> KhasminskiiConstants:
    slack = params.a3 - params.a4 ** 2 - params.a5 ** 2
    k1 = max(params.a1, params.a2 ** 2 / (4.0 * slack))
    return KhasminskiiConstants(K1=k1, K2=0.5 * params.a5 ** 2, beta=4.0)


def strong_constants_55(params, p_bar: float) -> StrongMomentConstants:
    a1, a2, a3, a4, a5 = params.a1, params.a2, params.a3, params.a4, params.a5
    c3 = abs(a2) + abs(a4) * (p_bar - 1.0)

    def gain(u: float) -> float:
        return abs(a1) * u + c3 * u ** 3 - a3 * u ** 4

    u_max = 10.0 * (1.0 + (abs(a1) + c3) / a3) + 10.0
    k_sup = maximize_on_ray(gain, u_max)
    return StrongMomentConstants(p_bar=p_bar,
                                 K1=max(abs(a2) + abs(a5) * (p_bar - 1.0), k_sup))


def _a6(params) -> float:
    a3 = params.a3
    peak = (16.0 / a3 + 1.0) ** 0.75
    return maximize_on_ray(lambda u: 8.0 * u ** (2.0 / 3.0) - 0.5 * a3 * u * u,
                           10.0 * peak + 10.0)


def _linear_minus_quadratic_sup(c: float, d: float) -> float:
    # max over u >= 0 of c u - d u^2
    if c <= 0:
        return 0.0
    return maximize_on_ray(lambda u: c * u - d * u * u, 10.0 * c / d + 10.0)


def gap_weight_55(params) -> Callable[[float, float], float]:
    quarter_a3 = 0.25 * params.a3

    def U(x: float, xb: float) -> float:
        d = x - xb
        return quarter_a3 * d * d * (x * x + xb * xb)

    return U


def monotonicity_constants_55(params, strengthened: bool = True) -> MonotonicityConstants:
    """Gap-weighted one-sided bound for the cubic-damping model.

    strengthened=True certifies the (1 + alpha)/2 variant with alpha = 1,
    the one the faster convergence rate rests on; strengthened=False
    certifies the basic variant (alpha = 0) with its smaller constant.
    """
    a2, a3, a4, a5 = params.a2, params.a3, params.a4, params.a5
    a6 = _a6(params)
    if strengthened:
        a8 = _linear_minus_quadratic_sup(9.0 * a4 * a4, 0.25 * a3)
        h = max(a6, a2 * a2) + 2.0 * max(a8, a5 * a5)
        alpha = 1.0
    else:
        a7 = _linear_minus_quadratic_sup(9.0 * a4 * a4, 0.5 * a3)
        h = max(a6, a2 * a2) + max(a7, a5 * a5)
        alpha = 0.0
    quarter_a3 = 0.25 * a3
    return MonotonicityConstants(
        H=h, alpha=alpha, U=gap_weight_55(params),
        kappa_of_b=lambda b: 2.0 * quarter_a3 * b * b)


def poly_lipschitz_constants_55(params) -> PolyLipschitzConstants:
    a2, a3, a4, a5 = params.a2, params.a3, params.a4, params.a5
    a8 = _linear_minus_quadratic_sup(9.0 * a4 * a4, 0.25 * a3)
    h3 = max(8.0 * a2 * a2, 16.0 * a3 * a3, 2.0 * max(a8, a5 * a5) + 0.5 * a3)
    return PolyLipschitzConstants(H3=h3, r=4.0)
