import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import vertex_lp_max
from robustqaoa import simplex, subproblem
from robustqaoa.errors import InfeasibleBounds, NumericalFailure
from robustqaoa.subproblem import LinearSurrogate, TrustRegion


def epigraph(bases, grads, theta, lo, hi, d):
    surr = [LinearSurrogate(b, np.asarray(g, dtype=float)) for b, g in zip(bases, grads)]
    return subproblem.build_epigraph(surr, np.asarray(theta, dtype=float), lo, hi, TrustRegion(d))


def test_surrogate_and_trust_region():
    s = LinearSurrogate(0.3, np.array([1.0, -2.0]))
    assert s(np.zeros(2)) == 0.3 and s(np.array([1.0, 1.0])) == pytest.approx(-0.7)
    assert TrustRegion(0.4).radius == 0.2
    with pytest.raises(ValueError):
        TrustRegion(0.0)


def test_single_surrogate_goes_to_corner():
    lp = epigraph([0.5], [[1.0, -1.0]], [1.0, 1.0], [0, 0], [2, 2], 0.4)
    step, f0 = subproblem.solve_lp(lp)
    assert np.allclose(step, [0.2, -0.2]) and f0 == pytest.approx(0.9)


def test_symmetric_crossing():
    # f0 <= x and f0 <= 1 - x for x in [0, 1], written as steps from x = 0
    lp = epigraph([0.0, 1.0], [[1.0], [-1.0]], [0.0], [0.0], [1.0], 10.0)
    step, f0 = subproblem.solve_lp(lp)
    assert step[0] == pytest.approx(0.5, abs=1e-12) and f0 == pytest.approx(0.5, abs=1e-12)


def test_boundary_bounds_and_degenerate_surrogates():
    lp = epigraph([0.1], [[1.0]], [1.9], [0.0], [2.0], 100.0)
    assert lp.step_lower[0] == pytest.approx(-1.9) and lp.step_upper[0] == pytest.approx(0.1)
    lp = epigraph([0.4, 0.2, 0.7], np.zeros((3, 2)), [1, 1], [0, 0], [2, 2], 0.5)
    step, f0 = subproblem.solve_lp(lp)
    assert f0 == pytest.approx(0.2) and np.allclose(step, 0)


def test_infeasible_bounds():
    with pytest.raises(InfeasibleBounds):
        subproblem.step_bounds(np.array([5.0]), [0.0], [2.0], TrustRegion(0.1))


def random_lp(rng):
    n, m = int(rng.integers(1, 5)), int(rng.integers(1, 7))
    theta = rng.uniform(0, 2, n)
    return epigraph(rng.uniform(0, 1, m), rng.normal(size=(m, n)), theta, np.zeros(n), np.full(n, 2.0),
                    rng.uniform(0.05, 1.5))


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(200):
        lp = random_lp(rng)
        step, f0 = subproblem.solve_lp(lp)
        assert f0 == pytest.approx(vertex_lp_max(*lp.standard_form()), abs=1e-9)
        assert np.all(step >= lp.step_lower - 1e-9) and np.all(step <= lp.step_upper + 1e-9)
        # θ̃ = 0 is feasible, so the predicted value never drops
        assert f0 >= lp.surrogate_min(np.zeros(lp.n_steps)) - 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shrink=st.floats(0.05, 1.0))
def test_shrinking_trust_never_increases_optimum(seed, shrink):
    rng = np.random.default_rng(seed)
    n, m = 3, 4
    bases, grads, theta = rng.uniform(0, 1, m), rng.normal(size=(m, n)), rng.uniform(0, 2, n)
    big = subproblem.solve_lp(epigraph(bases, grads, theta, np.zeros(n), np.full(n, 2.0), 1.0))[1]
    small = subproblem.solve_lp(epigraph(bases, grads, theta, np.zeros(n), np.full(n, 2.0), shrink))[1]
    assert small <= big + 1e-12


def test_simplex_general_lp_and_infeasible():
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6, bounds [0, 10]
    x, v = simplex.linprog_max(np.array([1.0, 1.0]), [[1, 2], [3, 1]], [4, 6], [0, 0], [10, 10])
    assert np.allclose(x, [1.6, 1.2]) and v == pytest.approx(2.8)
    # negative right-hand side exercises phase 1
    x, v = simplex.linprog_max(np.array([-1.0]), [[-1.0]], [-1.0], [0.0], [5.0])
    assert x[0] == pytest.approx(1.0)
    with pytest.raises(NumericalFailure):
        simplex.linprog_max(np.array([1.0]), [[1.0]], [-1.0], [0.0], [5.0])
    with pytest.raises(ValueError):
        simplex.linprog_max(np.array([1.0]), [[1.0]], [1.0], [0.0], [np.inf])


def test_quadratic_mode_reduces_to_lp():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n, m = 3, 4
        bases, grads, theta = rng.uniform(0, 1, m), rng.normal(size=(m, n)), rng.uniform(0, 2, n)
        lp_val = subproblem.solve_lp(epigraph(bases, grads, theta, np.zeros(n), np.full(n, 2.0), 0.6))[1]
        _, q_val = subproblem.solve_maxmin_quadratic(bases, grads, np.zeros((m, n, n)), theta, np.zeros(n),
                                                     np.full(n, 2.0), TrustRegion(0.6))
        assert q_val == pytest.approx(lp_val, abs=1e-6)


def test_quadratic_single_piece():
    # -s² + s on [-1, 1] peaks at s = 0.5
    step, value = subproblem.solve_maxmin_quadratic([0.0], [[1.0]], [[[-2.0]]], [1.0], [0.0], [2.0],
                                                    TrustRegion(2.0))
    assert step[0] == pytest.approx(0.5, abs=1e-6) and value == pytest.approx(0.25, abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_quadratic_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    bases = rng.uniform(0, 1, 2)
    grads = rng.normal(size=(2, 2))
    hess = []
    for _ in range(2):
        m = rng.normal(size=(2, 2))
        hess.append(-(m @ m.T))
    hess = np.array(hess)
    theta = np.array([1.0, 1.0])
    step, value = subproblem.solve_maxmin_quadratic(bases, grads, hess, theta, [0, 0], [2, 2], TrustRegion(2.0))
    xs = np.linspace(-1, 1, 201)
    grid = max(min(b + g @ np.array([x, y]) + 0.5 * np.array([x, y]) @ h @ np.array([x, y])
                   for b, g, h in zip(bases, grads, hess)) for x in xs for y in xs)
    assert value >= grid - 1e-4
    assert np.all(np.abs(step) <= 1.0 + 1e-12)
    assert value >= min(bases) - 1e-9
