"""Robust control optimizers.

* :func:`scp_optimize` — trust-region sequential convex programming on the
  sampled worst-case fidelity.
* :func:`grape_optimize` — momentum gradient ascent on a fixed objective
  (one sample, or the mean over a fixed sample list).
* :func:`bgrape_optimize` — momentum ascent on fresh random draws each step.
* :func:`agrape_optimize` — best-response rounds against adversarial samples
  kept in a bounded memory.

The generic cores (:func:`scp_maximize_min`, :func:`momentum_ascent`) take
plain callables, so they can be exercised on synthetic objectives.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import engine, uncertainty
from .errors import InfeasibleStart
from .subproblem import EpigraphLP, TrustRegion, solve_lp, solve_maxmin_quadratic, step_bounds

log = logging.getLogger(__name__)

DEGENERATE_DENOMINATOR = 1e-14
FEASIBILITY_SLACK = 1e-12


def _check_start(theta0, lower, upper):
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != np.shape(lower):
        raise InfeasibleStart(f"initial control has shape {theta0.shape}, expected {np.shape(lower)}")
    if np.any(theta0 < lower - FEASIBILITY_SLACK) or np.any(theta0 > upper + FEASIBILITY_SLACK):
        raise InfeasibleStart("initial control lies outside the feasible box")
    return np.clip(theta0, lower, upper)


# --- SCP --------------------------------------------------------------------

@dataclass(frozen=True)
class ScpConfig:
    eta1: float = 0.5
    eta2: float = 0.1
    gamma1: float = 2.0
    gamma2: float = 0.2
    t_max: int = 500
    tol_d: float = 1e-6
    tol_sigma: float = 1e-8
    initial_d: float = 0.2
    surrogate_mode: str = "linear"
    hessian_step: float = 1e-4
    time_budget: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.eta2 < self.eta1 < 1:
            raise ValueError("need 0 < eta2 < eta1 < 1")
        if not (self.gamma1 > 1 and 0 < self.gamma2 < 1):
            raise ValueError("need gamma1 > 1 and 0 < gamma2 < 1")
        if self.t_max < 1 or self.initial_d <= 0 or self.tol_d < 0 or self.tol_sigma < 0:
            raise ValueError("t_max, initial_d must be positive and tolerances nonnegative")
        if self.surrogate_mode not in ("linear", "quadratic"):
            raise ValueError(f"unknown surrogate_mode {self.surrogate_mode!r}")


@dataclass(frozen=True)
class ScpIteration:
    t: int
    worst: float          # sampled worst case at the incumbent after this step
    trial_worst: float
    predicted: float
    sigma: float
    d: float              # diameter after the update
    accepted: bool
    degenerate: bool = False


@dataclass
class ScpTrace:
    initial_worst: float
    iterations: list = field(default_factory=list)
    theta: Optional[np.ndarray] = None
    wall_time: float = 0.0
    stop_reason: str = ""

    def append(self, rec):
        if rec.accepted:
            assert rec.sigma > 0, "accepted SCP step with sigma <= 0"
            assert rec.worst >= self.best_worst, "accepted SCP step decreased the worst case"
        self.iterations.append(rec)

    @property
    def best_worst(self):
        accepted = [r.worst for r in self.iterations if r.accepted]
        return max([self.initial_worst] + accepted)

    @property
    def n_accepted(self):
        return sum(r.accepted for r in self.iterations)

    def to_dict(self):
        return {
            "initial_worst": self.initial_worst,
            "theta": None if self.theta is None else [float(x) for x in self.theta],
            "wall_time": self.wall_time,
            "stop_reason": self.stop_reason,
            "iterations": [
                {"t": r.t, "worst": r.worst, "trial_worst": r.trial_worst, "predicted": r.predicted,
                 "sigma": r.sigma, "d": r.d, "accepted": r.accepted, "degenerate": r.degenerate}
                for r in self.iterations
            ],
        }

    @classmethod
    def from_dict(cls, data):
        trace = cls(data["initial_worst"], [ScpIteration(**r) for r in data["iterations"]],
                    None if data["theta"] is None else np.array(data["theta"]),
                    data["wall_time"], data["stop_reason"])
        return trace


def acceptance_ratio(actual_old, actual_new, predicted_new):
    """Ratio of actual to predicted improvement.

    Returns:
        (sigma, degenerate).  A predicted improvement below 1e-14 (including
        a negative one from round-off) gives ``(0.0, True)``.
    """
    denom = predicted_new - actual_old
    if denom < DEGENERATE_DENOMINATOR:
        return 0.0, True
    return (actual_new - actual_old) / denom, False


def trust_region_update(d, sigma, config):
    if sigma > config.eta1:
        return config.gamma1 * d
    if sigma >= config.eta2:
        return d
    return config.gamma2 * d


def scp_maximize_min(evaluate, theta0, lower, upper, config=ScpConfig(), values_only=None, hessians=None):
    """Trust-region SCP on ``minᵢ fᵢ(θ)`` over a box.

    Args:
        evaluate: ``θ -> (values[L], gradients[L, n])``.
        values_only: optional cheaper ``θ -> values[L]`` for trial points.
        hessians: ``θ -> array[L, n, n]`` of negative-semidefinite parts;
            required in quadratic mode.

    Returns:
        (best θ, ScpTrace)
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    theta = _check_start(theta0, lower, upper)
    if config.surrogate_mode == "quadratic" and hessians is None:
        raise ValueError("quadratic mode needs a Hessian callback")
    if values_only is None:
        values_only = lambda th: evaluate(th)[0]

    start = time.perf_counter()
    values, grads = evaluate(theta)
    worst = float(np.min(values))
    hess = hessians(theta) if config.surrogate_mode == "quadratic" else None
    trace = ScpTrace(initial_worst=worst)
    d = float(config.initial_d)
    trace.stop_reason = "t_max"

    for t in range(1, config.t_max + 1):
        if config.time_budget is not None and time.perf_counter() - start > config.time_budget:
            trace.stop_reason = "time_budget"
            break
        trust = TrustRegion(d)
        if config.surrogate_mode == "linear":
            lo, hi = step_bounds(theta, lower, upper, trust)
            step, predicted = solve_lp(EpigraphLP(values, grads, lo, hi))
        else:
            step, predicted = solve_maxmin_quadratic(values, grads, hess, theta, lower, upper, trust)
        trial = np.clip(theta + step, lower, upper)
        trial_values = np.asarray(values_only(trial), dtype=float)
        trial_worst = float(np.min(trial_values))
        sigma, degenerate = acceptance_ratio(worst, trial_worst, predicted)
        accepted = sigma > 0
        if accepted:
            theta = trial
            values, grads = evaluate(theta)
            worst = float(np.min(values))
            if config.surrogate_mode == "quadratic":
                hess = hessians(theta)
        d = trust_region_update(d, sigma, config)
        trace.append(ScpIteration(t, worst, trial_worst, predicted, sigma, d, accepted, degenerate))
        if d < config.tol_d:
            trace.stop_reason = "tol_d"
            break
        if 0 < sigma < config.tol_sigma:
            trace.stop_reason = "tol_sigma"
            break

    trace.theta = theta.copy()
    trace.wall_time = time.perf_counter() - start
    log.debug("SCP stopped (%s) after %d iterations, worst=%.6g", trace.stop_reason, len(trace.iterations), worst)
    return theta, trace


def scp_optimize(instance, theta0, sampleset, config=ScpConfig()):
    """Maximize the worst-case fidelity over ``sampleset``."""
    lower, upper = instance.theta_bounds()
    deltas = list(sampleset)
    batch = engine.SampleBatch(instance, deltas)

    def evaluate(th):
        return batch.evaluate(th, with_gradient=True)

    def values_only(th):
        return batch.evaluate(th, with_gradient=False)[0]

    def hessians(th):
        return np.array([engine.negative_semidefinite_part(
            engine.fidelity_hessian_fd(instance, th, d, config.hessian_step)) for d in deltas])

    return scp_maximize_min(evaluate, theta0, lower, upper, config, values_only, hessians)


# --- GRAPE family -------------------------------------------------------------

@dataclass(frozen=True)
class GrapeConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 1
    iterations: int = 2000
    decay_window: int = 500
    decay_factor: float = 0.5
    target: Optional[float] = None
    time_budget: Optional[float] = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.iterations < 1:
            raise ValueError("batch_size and iterations must be >= 1")
        if self.decay_window < 0 or not 0 < self.decay_factor <= 1:
            raise ValueError("decay_window must be >= 0 and decay_factor in (0, 1]")


@dataclass
class GrapeResult:
    theta: np.ndarray          # the answer the method reports
    best_theta: np.ndarray
    best_value: float
    final_theta: np.ndarray
    history: np.ndarray        # objective at every evaluated iterate
    learning_rate: float       # after any decay
    wall_time: float
    path: Optional[list] = None


def momentum_ascent(value_and_grad, theta0, lower, upper, config, record_path=False):
    """Projected momentum ascent::

        g_t = ∇f(θ_{t-1}) + λ g_{t-1}
        θ_t = clip(θ_{t-1} + β g_t, lower, upper)

    ``β`` is multiplied by ``decay_factor`` whenever the mean objective over
    the last ``decay_window`` iterations falls below that of the window
    before.  Stops early once the objective reaches ``config.target``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    theta = _check_start(theta0, lower, upper)
    beta = float(config.learning_rate)
    g = np.zeros_like(theta)
    best_theta, best_value = theta.copy(), -np.inf
    history = []
    path = [theta.copy()] if record_path else None
    window = config.decay_window
    prev_window_mean = None
    start = time.perf_counter()
    for t in range(config.iterations):
        value, grad = value_and_grad(theta)
        history.append(value)
        if value > best_value:
            best_theta, best_value = theta.copy(), value
        if config.target is not None and value >= config.target:
            break
        if config.time_budget is not None and time.perf_counter() - start > config.time_budget:
            break
        if window and (t + 1) % window == 0:
            mean = float(np.mean(history[-window:]))
            if prev_window_mean is not None and mean < prev_window_mean:
                beta *= config.decay_factor
            prev_window_mean = mean
        g = grad + config.momentum * g
        theta = np.clip(theta + beta * g, lower, upper)
        if record_path:
            path.append(theta.copy())
    return GrapeResult(best_theta, best_theta, float(best_value), theta, np.array(history), beta,
                       time.perf_counter() - start, path)


def _mean_objective(instance, deltas):
    batch = engine.SampleBatch(instance, deltas)

    def value_and_grad(th):
        values, grads = batch.evaluate(th, with_gradient=True)
        return float(np.mean(values)), grads.mean(axis=0)

    return value_and_grad


def grape_optimize(instance, theta0, objective, config=GrapeConfig(), record_path=False):
    """Momentum ascent on one sample or on the mean over a fixed sample list.

    ``objective`` is a single ``δ`` (1-D array-like) or an iterable of them
    (e.g. a :class:`~robustqaoa.uncertainty.SampleSet`).
    """
    if isinstance(objective, uncertainty.SampleSet):
        deltas = list(objective)
    else:
        arr = np.asarray(objective, dtype=float)
        deltas = [arr] if arr.ndim <= 1 else list(arr)
    lower, upper = instance.theta_bounds()
    return momentum_ascent(_mean_objective(instance, deltas), theta0, lower, upper, config, record_path)


def bgrape_optimize(instance, theta0, box, config=GrapeConfig(iterations=20_000), seed=0, record_path=False):
    """Momentum ascent on the mean fidelity of ``batch_size`` fresh uniform draws.

    The reported control is the final iterate.
    """
    rng = np.random.default_rng(seed)
    lo, hi = np.array(box.lower), np.array(box.upper)

    def value_and_grad(th):
        draws = rng.uniform(lo, hi, size=(config.batch_size, box.dim))
        values, grads = engine.evaluate_samples(instance, th, list(draws), with_gradient=True)
        return float(np.mean(values)), grads.mean(axis=0)

    lower, upper = instance.theta_bounds()
    res = momentum_ascent(value_and_grad, theta0, lower, upper, config, record_path)
    res.theta = res.final_theta
    return res


@dataclass(frozen=True)
class AGrapeConfig:
    rounds: int = 15
    memory: int = 10
    inner: GrapeConfig = GrapeConfig(iterations=1000)
    refine_iters: int = 3
    time_budget: Optional[float] = None

    def __post_init__(self):
        if self.memory < 1 or self.rounds < 1:
            raise ValueError("memory and rounds must be >= 1")


@dataclass
class AGrapeResult:
    theta: np.ndarray
    memory_sizes: list
    adversarial: list          # (δ_t, F(θ_t, δ_t)) per round
    wall_time: float


def agrape_optimize(instance, theta0, box, config=AGrapeConfig()):
    """Alternate a GRAPE best response over the memory ``B`` with an adversarial draw.

    ``B`` starts as the nominal sample.  While ``|B| < memory`` each new
    adversarial sample is appended; afterwards ``B`` holds the most recent
    ``memory`` adversarial samples.
    """
    lower, upper = instance.theta_bounds()
    theta = _check_start(theta0, lower, upper)
    memory = [np.clip(np.asarray(instance.nominal_delta, dtype=float), box.lower, box.upper)]
    found = []
    sizes = []
    start = time.perf_counter()
    for t in range(config.rounds):
        if config.time_budget is not None and time.perf_counter() - start > config.time_budget:
            break
        inner = config.inner
        if config.time_budget is not None:
            left = max(config.time_budget - (time.perf_counter() - start), 0.0)
            inner = replace(inner, time_budget=left if inner.time_budget is None else min(left, inner.time_budget))
        theta = grape_optimize(instance, theta, memory, inner).theta
        delta_t, f_t = uncertainty.adversarial_sample(instance, theta, box, config.refine_iters)
        found.append((delta_t.copy(), f_t))
        if len(memory) < config.memory:
            memory.append(delta_t)
        else:
            memory = [d for d, _ in found[-config.memory:]]
        sizes.append(len(memory))
    return AGrapeResult(theta, sizes, found, time.perf_counter() - start)
