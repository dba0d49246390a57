"""Experiment configuration files.

A config is a YAML (or JSON) mapping.  Unknown keys anywhere are errors, so
a typo in a hyperparameter name cannot silently fall back to a default.

Example::

    system: chain_two_init_error
    n_sites: 7
    depth: 8
    box: {lower: [0.0, 0.0], upper: [0.01, 0.01]}
    optimizer: scp
    optimizer_config: {t_max: 2000}
    sampler: {points_per_axis: 5, seed: 0}
    output: results/init_error_d1
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigInvalid
from .spinmodel import SYSTEMS
from .uncertainty import UncertaintyBox

OPTIMIZERS = ("scp", "bgrape", "agrape", "grape_nominal")
DEFAULT_THETA_MAX = 2.0 * math.pi

# Appendix-A budgets per system family
SCP_DEFAULTS = {
    "single_qubit": {"t_max": 500, "tol_sigma": 1e-6},
    "chain_one": {"t_max": 2000, "tol_sigma": 1e-8},
    "chain_two": {"t_max": 20000, "tol_sigma": 1e-8},
    "chain_two_init_error": {"t_max": 20000, "tol_sigma": 1e-8},
}
BGRAPE_ITERATIONS = {"single_qubit": 20_000}
BGRAPE_ITERATIONS_MULTI = 50_000
AGRAPE_ROUNDS = {"chain_one": 25}
AGRAPE_ROUNDS_DEFAULT = 15

# upper end of the uniform draw for random warm-start guesses
INIT_HIGH = {"single_qubit": 0.5}


@dataclass
class SamplerConfig:
    points_per_axis: Optional[int] = None   # None: 5 for 2-D boxes, 9 for scalar
    seed: int = 0


@dataclass
class EvaluationConfig:
    points_per_axis: int = 9


@dataclass
class WarmStartConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    iterations: int = 5000
    target: float = 0.999
    attempts: int = 10
    init_high: Optional[float] = None


@dataclass
class ExperimentConfig:
    system: str
    n_sites: Optional[int] = None
    depth: Optional[int] = None
    theta_max: float = DEFAULT_THETA_MAX
    box: Optional[UncertaintyBox] = None
    optimizer: str = "scp"
    optimizer_config: dict = field(default_factory=dict)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    warm_start: WarmStartConfig = field(default_factory=WarmStartConfig)
    restarts: Optional[int] = None          # None: 10 for single_qubit, 1 otherwise
    depths: Optional[list] = None           # depth sweep, warm-started by zero padding
    scan: Optional[dict] = None
    output: Optional[str] = None
    label: Optional[str] = None

    # --- derived defaults ------------------------------------------------
    def resolved_depth(self):
        if self.depth is not None:
            return self.depth
        if self.system == "single_qubit":
            return 5
        if self.system == "chain_one":
            return 2 * self.n_sites
        return self.n_sites + 1

    def resolved_restarts(self):
        if self.restarts is not None:
            return self.restarts
        return 10 if self.system == "single_qubit" else 1

    def resolved_points(self):
        if self.sampler.points_per_axis is not None:
            return self.sampler.points_per_axis
        return 9 if self.box.dim == 1 else 5

    def resolved_init_high(self):
        if self.warm_start.init_high is not None:
            return self.warm_start.init_high
        return INIT_HIGH.get(self.system, self.theta_max)

    def to_dict(self):
        out = asdict(self)
        out["box"] = None if self.box is None else {"lower": list(self.box.lower), "upper": list(self.box.upper)}
        return out


_SECTIONS = {"sampler": SamplerConfig, "evaluation": EvaluationConfig, "warm_start": WarmStartConfig}
_SCP_KEYS = {"eta1", "eta2", "gamma1", "gamma2", "t_max", "tol_d", "tol_sigma", "initial_d",
             "surrogate_mode", "hessian_step", "time_budget"}
_GRAPE_KEYS = {"learning_rate", "momentum", "batch_size", "iterations", "decay_window", "decay_factor",
               "target", "time_budget"}
_AGRAPE_KEYS = {"rounds", "memory", "refine_iters", "time_budget", "inner"}
OPTIMIZER_KEYS = {"scp": _SCP_KEYS, "bgrape": _GRAPE_KEYS, "agrape": _AGRAPE_KEYS, "grape_nominal": set()}


def _section(name, cls, data):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigInvalid(name, "must be a mapping")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigInvalid(f"{name}.{key}", "unknown key")
    return cls(**data)


def _box(data, name="box"):
    if not isinstance(data, dict) or set(data) != {"lower", "upper"}:
        raise ConfigInvalid(name, "must be a mapping with exactly 'lower' and 'upper'")
    try:
        return UncertaintyBox(tuple(data["lower"]), tuple(data["upper"]))
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(name, str(exc)) from None


def from_dict(data):
    """Validate a raw mapping and build an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigInvalid("<root>", "config must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigInvalid(key, "unknown key")
    if "system" not in data:
        raise ConfigInvalid("system", "required")
    system = data["system"]
    if system not in SYSTEMS:
        raise ConfigInvalid("system", f"must be one of {', '.join(SYSTEMS)}")
    kwargs = dict(data)
    for name, cls in _SECTIONS.items():
        kwargs[name] = _section(name, cls, data.get(name))

    n_sites = data.get("n_sites")
    if system == "single_qubit":
        if n_sites not in (None, 1):
            raise ConfigInvalid("n_sites", "single_qubit has exactly one site")
        kwargs["n_sites"] = 1
    elif not isinstance(n_sites, int) or not 3 <= n_sites <= 7:
        raise ConfigInvalid("n_sites", "must be an integer in [3, 7]")

    delta_dim = 1 if system == "chain_two" else 2
    if "box" not in data:
        raise ConfigInvalid("box", "required")
    box = _box(data["box"])
    if box.dim != delta_dim:
        raise ConfigInvalid("box", f"{system} needs a {delta_dim}-dimensional box")
    if system == "chain_two_init_error":
        peak = sum(max(lo * lo, hi * hi) for lo, hi in zip(box.lower, box.upper))
        if peak > 1.0:
            raise ConfigInvalid("box", "initial-state amplitudes must satisfy ω₂² + ω₃² <= 1 on the whole box")
    kwargs["box"] = box

    depth = data.get("depth")
    if depth is not None and (not isinstance(depth, int) or depth < 1):
        raise ConfigInvalid("depth", "must be a positive integer")
    theta_max = data.get("theta_max", DEFAULT_THETA_MAX)
    if not isinstance(theta_max, (int, float)) or theta_max <= 0:
        raise ConfigInvalid("theta_max", "must be a positive number")
    kwargs["theta_max"] = float(theta_max)

    optimizer = data.get("optimizer", "scp")
    if optimizer not in OPTIMIZERS:
        raise ConfigInvalid("optimizer", f"must be one of {', '.join(OPTIMIZERS)}")
    overrides = data.get("optimizer_config") or {}
    if not isinstance(overrides, dict):
        raise ConfigInvalid("optimizer_config", "must be a mapping")
    for key in overrides:
        if key not in OPTIMIZER_KEYS[optimizer]:
            raise ConfigInvalid(f"optimizer_config.{key}", f"unknown key for optimizer {optimizer}")
    if "inner" in overrides:
        inner = overrides["inner"]
        if not isinstance(inner, dict):
            raise ConfigInvalid("optimizer_config.inner", "must be a mapping")
        for key in inner:
            if key not in _GRAPE_KEYS:
                raise ConfigInvalid(f"optimizer_config.inner.{key}", "unknown key")
    kwargs["optimizer_config"] = dict(overrides)

    restarts = data.get("restarts")
    if restarts is not None and (not isinstance(restarts, int) or restarts < 1):
        raise ConfigInvalid("restarts", "must be a positive integer")
    depths = data.get("depths")
    if depths is not None and (not isinstance(depths, list) or not depths
                               or not all(isinstance(p, int) and p >= 1 for p in depths)
                               or depths != sorted(depths)):
        raise ConfigInvalid("depths", "must be a nonempty ascending list of positive integers")
    scan = data.get("scan")
    if scan is not None:
        if not isinstance(scan, dict) or not set(scan) <= {"points_per_axis", "box", "theta"}:
            raise ConfigInvalid("scan", "allowed keys: points_per_axis, box, theta")
        scan = dict(scan)
        if "box" in scan:
            scan["box"] = _box(scan["box"], "scan.box")
        kwargs["scan"] = scan

    cfg = ExperimentConfig(**kwargs)
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg):
    if cfg.sampler.points_per_axis is not None and cfg.sampler.points_per_axis < 2:
        raise ConfigInvalid("sampler.points_per_axis", "must be >= 2")
    if cfg.evaluation.points_per_axis < 2:
        raise ConfigInvalid("evaluation.points_per_axis", "must be >= 2")
    ws = cfg.warm_start
    if ws.attempts < 1 or ws.iterations < 1:
        raise ConfigInvalid("warm_start", "attempts and iterations must be >= 1")
    if not 0 < ws.target <= 1:
        raise ConfigInvalid("warm_start.target", "must lie in (0, 1]")
    if ws.init_high is not None and not 0 < ws.init_high <= cfg.theta_max:
        raise ConfigInvalid("warm_start.init_high", "must lie in (0, theta_max]")


def load(path):
    """Read and validate a config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(str(path), f"cannot read config: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigInvalid(str(path), f"not valid YAML: {exc}") from None
    return from_dict(data)


def load_list(path):
    """A table config: ``configs`` is a list of inline mappings or relative file paths."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigInvalid(str(path), f"cannot read config list: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigInvalid(str(path), f"not valid YAML: {exc}") from None
    if not isinstance(data, dict) or set(data) - {"configs", "output", "defaults"} or "configs" not in data:
        raise ConfigInvalid(str(path), "expected keys: configs (required), defaults, output")
    defaults = data.get("defaults") or {}
    out = []
    for i, item in enumerate(data["configs"]):
        if isinstance(item, str):
            raw = yaml.safe_load((path.parent / item).read_text())
        elif isinstance(item, dict):
            raw = item
        else:
            raise ConfigInvalid(f"configs[{i}]", "must be a mapping or a file path")
        merged = {**defaults, **raw}
        out.append(from_dict(merged))
    return out, data.get("output")
