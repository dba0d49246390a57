"""The convex max-min step solved at every SCP iteration.

Each sample ``δᵢ`` contributes a surrogate of ``F(θ + s, δᵢ)`` in the step
``s``.  In linear mode the surrogate is ``Fᵢ + gᵢ·s`` and the epigraph
problem::

    maximize f0   subject to   Fᵢ + gᵢ·s >= f0  (all i),
                               θ + s ∈ Θ,  ‖s‖∞ <= d/2

is an LP.  The quadratic mode adds ``½ sᵀ Hᵢ s`` with ``Hᵢ`` negative
semidefinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleBounds
from .simplex import linprog_max

BOUND_TOL = 1e-9


@dataclass(frozen=True)
class LinearSurrogate:
    base_value: float
    gradient: np.ndarray

    def __call__(self, step):
        return float(self.base_value + self.gradient @ step)


@dataclass(frozen=True)
class TrustRegion:
    diameter: float

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError("trust-region diameter must be positive")

    @property
    def radius(self):
        return 0.5 * self.diameter


@dataclass(frozen=True, eq=False)
class EpigraphLP:
    """Epigraph form of the linearized max-min step.

    ``base`` and ``gradients`` stack the surrogates; ``step_lower`` and
    ``step_upper`` are the per-component bounds on the step after
    intersecting the shifted control box with the trust box.
    """

    base: np.ndarray
    gradients: np.ndarray
    step_lower: np.ndarray
    step_upper: np.ndarray

    @property
    def n_steps(self):
        return self.gradients.shape[1]

    def surrogate_min(self, step):
        return float(np.min(self.base + self.gradients @ step))

    def slack_bounds(self):
        """Interval guaranteed to contain the optimal slack ``f0``."""
        lo_terms = np.minimum(self.gradients * self.step_lower, self.gradients * self.step_upper)
        hi_terms = np.maximum(self.gradients * self.step_lower, self.gradients * self.step_upper)
        return float(np.min(self.base + lo_terms.sum(axis=1))), float(np.min(self.base + hi_terms.sum(axis=1)))

    def standard_form(self):
        """``(c, A_ub, b_ub, lower, upper)`` over variables ``(s, f0)``."""
        n = self.n_steps
        c = np.zeros(n + 1)
        c[-1] = 1.0
        a_ub = np.hstack([-self.gradients, np.ones((self.gradients.shape[0], 1))])
        f_lo, f_hi = self.slack_bounds()
        lower = np.append(self.step_lower, f_lo)
        upper = np.append(self.step_upper, f_hi)
        return c, a_ub, self.base.copy(), lower, upper


def step_bounds(theta, theta_lower, theta_upper, trust):
    theta = np.asarray(theta, dtype=float)
    lower = np.maximum(np.asarray(theta_lower, dtype=float) - theta, -trust.radius)
    upper = np.minimum(np.asarray(theta_upper, dtype=float) - theta, trust.radius)
    if np.any(lower > upper + BOUND_TOL):
        bad = int(np.argmax(lower - upper))
        raise InfeasibleBounds(f"empty step interval for component {bad}: [{lower[bad]:.3g}, {upper[bad]:.3g}]")
    # θ on the boundary can leave lower a hair above upper
    return np.minimum(lower, upper), np.maximum(lower, upper)


def build_epigraph(surrogates, theta, theta_lower, theta_upper, trust):
    """Assemble the epigraph LP from per-sample linear surrogates."""
    if not surrogates:
        raise ValueError("need at least one surrogate")
    base = np.array([s.base_value for s in surrogates], dtype=float)
    grads = np.array([np.asarray(s.gradient, dtype=float) for s in surrogates])
    lower, upper = step_bounds(theta, theta_lower, theta_upper, trust)
    if grads.shape[1] != lower.shape[0]:
        raise ValueError("surrogate gradients do not match the control dimension")
    return EpigraphLP(base, grads, lower, upper)


def solve_lp(lp):
    """Optimal step and slack of an :class:`EpigraphLP`.

    When ``0`` lies in the step box (always, for θ ∈ Θ) the step is split as
    ``s = s⁺ - s⁻`` with both parts starting at zero, so components that
    cannot improve the objective are left at ``0`` instead of being parked
    on a bound.
    """
    c, a_ub, b_ub, lower, upper = lp.standard_form()
    n = lp.n_steps
    if np.all(lp.step_lower <= 0.0) and np.all(lp.step_upper >= 0.0):
        g = a_ub[:, :n]
        c2 = np.concatenate([np.zeros(2 * n), [1.0]])
        a2 = np.hstack([g, -g, a_ub[:, n:]])
        lo2 = np.concatenate([np.zeros(2 * n), lower[n:]])
        hi2 = np.concatenate([lp.step_upper, -lp.step_lower, upper[n:]])
        x, _ = linprog_max(c2, a2, b_ub, lo2, hi2)
        step = x[:n] - x[n:2 * n]
    else:
        x, _ = linprog_max(c, a_ub, b_ub, lower, upper)
        step = x[:-1]
    step = np.clip(step, lp.step_lower, lp.step_upper)
    return step, lp.surrogate_min(step)


# --- optional concave-quadratic mode ---------------------------------------

def _quadratic_values(base, grads, hessians, x):
    return base + grads @ x + 0.5 * np.einsum("i,kij,j->k", x, hessians, x)


def _quadratic_gradients(grads, hessians, x):
    return grads + hessians @ x


def solve_maxmin_quadratic(base, grads, hessians, theta, theta_lower, theta_upper, trust,
                           iterations=500, polish_iters=40):
    """Maximize ``minᵢ (bᵢ + gᵢ·s + ½ sᵀHᵢs)`` over the step box.

    Projected subgradient ascent with diminishing steps and ergodic
    averaging finds the neighbourhood of the optimum; a cutting-plane
    polish (tangent planes of the concave pieces, solved as LPs) then
    tightens it.  Falls back to the LP when every ``Hᵢ`` vanishes.

    Returns:
        (step, surrogate value at step)
    """
    base = np.asarray(base, dtype=float)
    grads = np.asarray(grads, dtype=float)
    hessians = np.asarray(hessians, dtype=float)
    lower, upper = step_bounds(theta, theta_lower, theta_upper, trust)
    if not np.any(hessians):
        lp = EpigraphLP(base, grads, lower, upper)
        return solve_lp(lp)

    value = lambda x: float(np.min(_quadratic_values(base, grads, hessians, x)))
    x = np.zeros_like(lower)
    best_x, best_v = x.copy(), value(x)
    diameter = float(np.linalg.norm(upper - lower))
    avg, weight = np.zeros_like(x), 0.0
    for k in range(iterations):
        vals = _quadratic_values(base, grads, hessians, x)
        i = int(np.argmin(vals))
        g = grads[i] + hessians[i] @ x
        norm = np.linalg.norm(g)
        if norm == 0.0 or diameter == 0.0:
            break
        alpha = diameter / (norm * np.sqrt(k + 1.0))
        x = np.clip(x + alpha * g, lower, upper)
        avg += alpha * x
        weight += alpha
        v = value(x)
        if v > best_v:
            best_x, best_v = x.copy(), v
    if weight > 0:
        xa = avg / weight
        va = value(xa)
        if va > best_v:
            best_x, best_v = xa, va

    # cutting-plane polish; each concave piece lies below its tangent planes
    cut_a, cut_b = [], []

    def add_cuts(point, vals):
        g = _quadratic_gradients(grads, hessians, point)
        for i in range(base.shape[0]):
            # t <= vals[i] + g_i·(s - point)
            cut_a.append(np.append(-g[i], 1.0))
            cut_b.append(vals[i] - g[i] @ point)

    add_cuts(best_x, _quadratic_values(base, grads, hessians, best_x))
    n = lower.shape[0]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    for _ in range(polish_iters):
        a_ub, b_ub = np.array(cut_a), np.array(cut_b)
        t_hi = float(np.min(b_ub + np.abs(a_ub[:, :n]) @ np.maximum(np.abs(lower), np.abs(upper))))
        t_lo = best_v - 1.0
        try:
            sol, bound = linprog_max(c, a_ub, b_ub, np.append(lower, t_lo), np.append(upper, max(t_hi, t_lo)))
        except ArithmeticError:
            break
        point = sol[:n]
        vals = _quadratic_values(base, grads, hessians, point)
        v = float(np.min(vals))
        if v > best_v:
            best_x, best_v = point.copy(), v
        if bound - best_v <= 1e-10 * max(1.0, abs(best_v)):
            break
        add_cuts(point, vals)
    return best_x, best_v
