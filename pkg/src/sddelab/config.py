"""Strict JSON run configuration for the command line driver.

Unknown keys are rejected (with a closest-match suggestion) rather than
ignored, so a typo cannot silently fall back to a default.  Every field
has a default except the command itself; the fully resolved mapping is
what lands in the run manifest.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field
from typing import Optional

from . import models
from .truncation import TruncationPolicy, make_power_law_policy

COMMANDS = ("check", "simulate", "converge", "gap", "moments")

_TOP_KEYS = {
    "command", "model", "policy", "horizon", "m_list", "m_ref", "q_list",
    "n_paths", "master_seed", "output_dir", "threads", "m", "p",
    "refinement_factor", "path_index", "box_radius", "n_samples", "p_bar",
}
_MODEL_KEYS = {"id", "tau", "initial", "a1", "a2", "a3", "a4", "a5"}
_POLICY_KEYS = {"mu_a", "mu_power", "rho", "delta_star_override"}


class ConfigError(ValueError):
    """Malformed or out-of-range run configuration."""


def _reject_unknown(mapping: dict, allowed: set, where: str):
    for key in mapping:
        if key not in allowed:
            hint = difflib.get_close_matches(key, sorted(allowed), n=1)
            suffix = f" (did you mean {hint[0]!r}?)" if hint else ""
            raise ConfigError(f"unknown key {key!r} in {where}{suffix}")


def _need(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


@dataclass
class RunConfig:
    """Fully resolved run: model, policy, grids, sampling and output knobs."""

    command: str
    model_id: str = "example55"
    model_params: dict = field(default_factory=dict)
    tau: float = 1.0
    initial_value: float = 1.0
    mu_a: Optional[float] = None  # None: use the model's growth bound
    mu_power: float = 3.0
    rho: float = 0.25
    delta_star_override: Optional[float] = 1.0
    horizon: float = 1.0
    m_list: tuple = (8, 16, 32, 64)
    m_ref: int = 0  # 0: 16 * max(m_list)
    q_list: tuple = (2.0,)
    n_paths: int = 1000
    master_seed: int = 0
    output_dir: str = "."
    threads: int = 1
    m: int = 64
    p: float = 2.0
    refinement_factor: int = 16
    path_index: int = 0
    box_radius: float = 50.0
    n_samples: int = 100000
    p_bar: float = 4.0

    def __post_init__(self):
        _need(self.command in COMMANDS,
              f"command must be one of {', '.join(COMMANDS)}; got {self.command!r}")
        self.model_params = models.resolve_params(self.model_id, self.model_params)
        _need(self.tau > 0, f"tau must be positive, got {self.tau}")
        _need(self.horizon > 0, f"horizon must be positive, got {self.horizon}")
        _need(0 < self.rho <= 0.25,
              f"rho must lie in (0, 1/4], got {self.rho}")
        _need(self.mu_power >= 1, f"mu_power must be >= 1, got {self.mu_power}")
        if self.mu_a is not None:
            _need(self.mu_a > 0, f"mu_a must be positive, got {self.mu_a}")
        if self.delta_star_override is not None:
            _need(0 < self.delta_star_override <= 1,
                  f"delta_star_override must lie in (0, 1], got {self.delta_star_override}")
        self.m_list = tuple(int(v) for v in self.m_list)
        _need(len(self.m_list) > 0, "m_list must not be empty")
        _need(all(v >= 1 for v in self.m_list),
              f"m_list entries must be positive integers, got {list(self.m_list)}")
        _need(sorted(set(self.m_list)) == list(self.m_list),
              f"m_list must be strictly increasing, got {list(self.m_list)}")
        if self.m_ref == 0:
            self.m_ref = 16 * max(self.m_list)
        _need(self.m_ref >= max(self.m_list),
              f"m_ref={self.m_ref} must be >= max(m_list)={max(self.m_list)}")
        for v in self.m_list:
            _need(self.m_ref % v == 0,
                  f"every m_list entry must divide m_ref: {v} does not divide {self.m_ref}")
        self.q_list = tuple(float(q) for q in self.q_list)
        _need(all(q > 0 for q in self.q_list),
              f"q_list entries must be positive, got {list(self.q_list)}")
        _need(self.n_paths >= 2, f"n_paths must be >= 2, got {self.n_paths}")
        _need(self.master_seed >= 0, f"master_seed must be >= 0, got {self.master_seed}")
        _need(self.threads >= 0, f"threads must be >= 0 (0 = auto), got {self.threads}")
        _need(self.m >= 1, f"m must be a positive integer, got {self.m}")
        _need(self.p > 0, f"p must be positive, got {self.p}")
        _need(self.refinement_factor >= 1,
              f"refinement_factor must be >= 1, got {self.refinement_factor}")
        _need(self.path_index >= 0, f"path_index must be >= 0, got {self.path_index}")
        _need(self.box_radius > 0, f"box_radius must be positive, got {self.box_radius}")
        _need(self.n_samples >= 1, f"n_samples must be >= 1, got {self.n_samples}")
        _need(self.p_bar > 2, f"p_bar must exceed 2, got {self.p_bar}")

    def build_model(self) -> models.SddeModel:
        return models.make_model(self.model_id, self.model_params,
                                 tau=self.tau, initial=self.initial_value)

    def build_policy(self) -> TruncationPolicy:
        a = self.mu_a
        if a is None:
            a = models.model_growth_bound(self.model_id, self.model_params)
        return make_power_law_policy(a, self.mu_power, self.rho,
                                     delta_star_override=self.delta_star_override)

    def resolved(self) -> dict:
        """The full mapping echoed into the run manifest."""
        return {
            "command": self.command,
            "model": {"id": self.model_id, "tau": self.tau,
                      "initial": self.initial_value, **self.model_params},
            "policy": {
                "mu_a": (self.mu_a if self.mu_a is not None else
                         models.model_growth_bound(self.model_id, self.model_params)),
                "mu_power": self.mu_power,
                "rho": self.rho,
                "delta_star_override": self.delta_star_override,
            },
            "horizon": self.horizon,
            "m_list": list(self.m_list),
            "m_ref": self.m_ref,
            "q_list": list(self.q_list),
            "n_paths": self.n_paths,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "threads": self.threads,
            "m": self.m,
            "p": self.p,
            "refinement_factor": self.refinement_factor,
            "path_index": self.path_index,
            "box_radius": self.box_radius,
            "n_samples": self.n_samples,
            "p_bar": self.p_bar,
        }


def parse_config(raw: dict) -> RunConfig:
    """Validate a raw mapping and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError(f"configuration must be a JSON object, got {type(raw).__name__}")
    _reject_unknown(raw, _TOP_KEYS, "configuration")
    _need("command" in raw, "configuration must name a command")

    kwargs = {"command": raw["command"]}
    model_raw = raw.get("model", {})
    _need(isinstance(model_raw, dict), "'model' must be an object")
    _reject_unknown(model_raw, _MODEL_KEYS, "'model'")
    if "id" in model_raw:
        kwargs["model_id"] = model_raw["id"]
        _need(kwargs["model_id"] in models.MODEL_IDS,
              f"unknown model id {model_raw['id']!r}; known ids: {', '.join(models.MODEL_IDS)}")
    kwargs["model_params"] = {k: v for k, v in model_raw.items()
                              if k in ("a1", "a2", "a3", "a4", "a5")}
    if "tau" in model_raw:
        kwargs["tau"] = float(model_raw["tau"])
    if "initial" in model_raw:
        kwargs["initial_value"] = float(model_raw["initial"])

    policy_raw = raw.get("policy", {})
    _need(isinstance(policy_raw, dict), "'policy' must be an object")
    _reject_unknown(policy_raw, _POLICY_KEYS, "'policy'")
    if "mu_a" in policy_raw:
        kwargs["mu_a"] = None if policy_raw["mu_a"] is None else float(policy_raw["mu_a"])
    if "mu_power" in policy_raw:
        kwargs["mu_power"] = float(policy_raw["mu_power"])
    if "rho" in policy_raw:
        kwargs["rho"] = float(policy_raw["rho"])
    if "delta_star_override" in policy_raw:
        value = policy_raw["delta_star_override"]
        kwargs["delta_star_override"] = None if value is None else float(value)

    for key, caster in (("horizon", float), ("m_ref", int), ("n_paths", int),
                        ("master_seed", int), ("output_dir", str), ("threads", int),
                        ("m", int), ("p", float), ("refinement_factor", int),
                        ("path_index", int), ("box_radius", float),
                        ("n_samples", int), ("p_bar", float)):
        if key in raw:
            kwargs[key] = caster(raw[key])
    if "m_list" in raw:
        _need(isinstance(raw["m_list"], (list, tuple)), "'m_list' must be a list")
        kwargs["m_list"] = tuple(int(v) for v in raw["m_list"])
    if "q_list" in raw:
        _need(isinstance(raw["q_list"], (list, tuple)), "'q_list' must be a list")
        kwargs["q_list"] = tuple(float(v) for v in raw["q_list"])

    try:
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc


def apply_override(raw: dict, assignment: str):
    """Apply one --set KEY=VALUE override; dotted keys descend into sections."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
    key, _, text = assignment.partition("=")
    key = key.strip()
    _need(bool(key), f"--set expects a nonempty key in {assignment!r}")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text  # bare strings are allowed unquoted
    target = raw
    parts = key.split(".")
    for part in parts[:-1]:
        target = target.setdefault(part, {})
        if not isinstance(target, dict):
            raise ConfigError(f"cannot descend into {part!r} in --set {assignment!r}")
    target[parts[-1]] = value
