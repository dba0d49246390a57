"""Uncertainty boxes, sample sets and worst-case evaluation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import EmptySampleSet, TooManySamples

MAX_SAMPLES = 10_000
ADVERSARIAL_GRID = 9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class UncertaintyBox:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(self.lower))
        hi = tuple(float(x) for x in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must be nonempty and of equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box: lower {lo} > upper {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def point(cls, delta):
        return cls(tuple(delta), tuple(delta))

    @property
    def dim(self):
        return len(self.lower)

    @property
    def center(self):
        return tuple(0.5 * (a + b) for a, b in zip(self.lower, self.upper))

    def contains(self, delta, tol=0.0):
        delta = np.asarray(delta, dtype=float).reshape(-1)
        return bool(np.all(delta >= np.array(self.lower) - tol) and np.all(delta <= np.array(self.upper) + tol))

    def clip(self, delta):
        return np.clip(np.asarray(delta, dtype=float), self.lower, self.upper)

    def scaled(self, factor, about=None):
        """Box shrunk or grown by ``factor`` around ``about`` (default: centre)."""
        about = self.center if about is None else tuple(about)
        lo = tuple(c + factor * (a - c) for a, c in zip(self.lower, about))
        hi = tuple(c + factor * (b - c) for b, c in zip(self.upper, about))
        return UncertaintyBox(lo, hi)


@dataclass(frozen=True)
class SampleSet:
    samples: tuple
    provenance: str = "grid"

    def __post_init__(self):
        samples = tuple(tuple(float(x) for x in np.atleast_1d(s)) for s in self.samples)
        if not samples:
            raise EmptySampleSet("sample set is empty")
        if len(set(samples)) != len(samples):
            raise ValueError("sample set contains duplicates")
        if self.provenance not in ("grid", "random", "adversarial"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def array(self):
        return np.array(self.samples, dtype=float)

    def union(self, other):
        """Samples of both sets, in order, duplicates dropped."""
        merged = list(dict.fromkeys(self.samples + tuple(other.samples)))
        return SampleSet(tuple(merged), self.provenance)


def axis_points(lo, hi, n):
    if lo == hi:
        return np.array([lo])
    pts = np.linspace(lo, hi, n)
    pts[0], pts[-1] = lo, hi
    return pts


def sample_grid(box, points_per_axis):
    """Cartesian grid including every corner; degenerate axes give one point."""
    if points_per_axis < 1:
        raise ValueError("points_per_axis must be >= 1")
    axes = []
    for lo, hi in zip(box.lower, box.upper):
        if lo != hi and points_per_axis < 2:
            raise ValueError("a non-degenerate axis needs at least 2 points to include both ends")
        axes.append(axis_points(lo, hi, points_per_axis))
    total = math.prod(len(a) for a in axes)
    if total > MAX_SAMPLES:
        raise TooManySamples(f"{total} samples exceeds the limit of {MAX_SAMPLES}")
    return SampleSet(tuple(itertools.product(*axes)), "grid")


def sample_random(box, count, rng):
    """``count`` uniform draws from the box using a numpy ``Generator``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > MAX_SAMPLES:
        raise TooManySamples(f"{count} samples exceeds the limit of {MAX_SAMPLES}")
    pts = rng.uniform(box.lower, box.upper, size=(count, box.dim))
    return SampleSet(tuple(dict.fromkeys(map(tuple, pts))), "random")


def worst_and_average(instance, theta, sampleset):
    """Minimum and mean fidelity over the samples, plus the first argmin."""
    samples = list(sampleset)
    if not samples:
        raise EmptySampleSet("sample set is empty")
    values, _ = engine.evaluate_samples(instance, theta, samples, with_gradient=False)
    k = int(np.argmin(values))
    return float(values[k]), float(np.mean(values)), k


def _golden_min(f, a, b, fa_best, x_best, iters=48, tol=1e-10):
    """Golden-section minimum of ``f`` on ``[a, b]``; never worse than ``fa_best``."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_f = x_best, fa_best
    for x, fx in ((c, fc), (d, fd)):
        if fx < best_f:
            best_x, best_f = x, fx
    for _ in range(iters):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
            x, fx = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
            x, fx = d, fd
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def adversarial_sample(instance, theta, box, refine_iters=3, grid_points=ADVERSARIAL_GRID):
    """Approximate ``argmin_δ F(θ, δ)`` over the box.

    A coarse grid scan picks the starting point; each refinement round runs
    a golden-section search along every coordinate within one step of the
    incumbent, then halves the step.

    Returns:
        (δ as a numpy array, its fidelity)
    """
    theta = engine.check_theta(instance, theta)
    grid = sample_grid(box, grid_points)
    values, _ = engine.evaluate_samples(instance, theta, list(grid), with_gradient=False)
    k = int(np.argmin(values))
    best = np.array(grid.samples[k])
    best_f = float(values[k])
    lo, hi = np.array(box.lower), np.array(box.upper)
    step = (hi - lo) / max(grid_points - 1, 1)
    for _ in range(refine_iters):
        for axis in range(box.dim):
            if step[axis] <= 0.0:
                continue
            a = max(lo[axis], best[axis] - step[axis])
            b = min(hi[axis], best[axis] + step[axis])

            def along(x, axis=axis):
                trial = best.copy()
                trial[axis] = x
                return engine.fidelity(instance, theta, trial)

            x, fx = _golden_min(along, a, b, best_f, best[axis])
            if fx < best_f:
                best[axis] = x
                best_f = fx
        step = step / 2.0
    return best, best_f
