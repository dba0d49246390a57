"""Dense two-phase simplex for small box-bounded LPs.

Solves::

    maximize    c @ x
    subject to  A @ x <= b
                lower <= x <= upper      (all bounds finite)

Variables are shifted to ``y = x - lower`` and the upper bounds become
ordinary rows, so the tableau only ever holds nonnegative variables.  Rows
with a negative right-hand side get an artificial variable and phase 1
drives those to zero.  Pivoting follows Bland's rule, which cannot cycle.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalFailure, Unbounded

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


def _pivot(t, basis, row, col):
    t[row] /= t[row, col]
    factors = t[:, col].copy()
    factors[row] = 0.0
    t -= np.outer(factors, t[row])
    basis[row] = col


def _run(t, basis, n_cols, max_iter):
    """Maximize the objective stored (negated) in the last row of ``t``.

    Only the first ``n_cols`` columns may enter the basis.
    """
    m = t.shape[0] - 1
    for _ in range(max_iter):
        reduced = t[-1, :n_cols]
        candidates = np.nonzero(reduced < -PIVOT_TOL)[0]
        if candidates.size == 0:
            return
        col = int(candidates[0])
        column = t[:m, col]
        positive = np.nonzero(column > PIVOT_TOL)[0]
        if positive.size == 0:
            raise Unbounded("objective is unbounded above")
        ratios = t[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        # Bland: among tied rows leave the one whose basic variable has the smallest index
        row = int(ties[np.argmin([basis[r] for r in ties])])
        _pivot(t, basis, row, col)
    raise NumericalFailure(f"simplex did not terminate within {max_iter} pivots")


def linprog_max(c, a_ub, b_ub, lower, upper, max_iter=20_000):
    """Solve the box-bounded LP above.

    Returns:
        (x, objective value)

    Raises:
        NumericalFailure: infeasible problem or pivot budget exhausted.
        Unbounded: cannot happen with finite bounds; signals a bug.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, n)
    b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("all variable bounds must be finite")
    if np.any(lower > upper):
        raise NumericalFailure("inconsistent variable bounds")

    span = upper - lower
    rows = np.vstack([a_ub, np.eye(n)])
    rhs = np.concatenate([b_ub - a_ub @ lower, span])
    m = rows.shape[0]

    negative = rhs < 0
    n_art = int(negative.sum())
    n_cols = n + m + n_art
    t = np.zeros((m + 1, n_cols + 1))
    t[:m, :n] = rows
    t[:m, n:n + m] = np.eye(m)
    t[:m, -1] = rhs
    t[:m][negative] *= -1.0
    basis = list(range(n, n + m))
    for k, r in enumerate(np.nonzero(negative)[0]):
        t[r, n + m + k] = 1.0
        basis[r] = n + m + k

    if n_art:
        # phase 1: maximize -sum(artificials)
        t[-1, n + m:n_cols] = 1.0
        for r in np.nonzero(negative)[0]:
            t[-1] -= t[r]
        _run(t, basis, n_cols, max_iter)
        if -t[-1, -1] > FEAS_TOL * max(1.0, np.abs(rhs).max()):
            raise NumericalFailure(f"LP infeasible (phase-1 residual {-t[-1, -1]:.3e})")
        # drive zero-level artificials out of the basis
        for r in range(m):
            if basis[r] >= n + m:
                nz = np.nonzero(np.abs(t[r, :n + m]) > PIVOT_TOL)[0]
                if nz.size:
                    _pivot(t, basis, r, int(nz[0]))
        keep = [r for r in range(m) if basis[r] < n + m]
        t = np.vstack([t[keep], t[-1:]])
        basis = [basis[r] for r in keep]
        t = np.hstack([t[:, :n + m], t[:, -1:]])
        n_cols = n + m
        m = len(keep)

    t[-1, :] = 0.0
    t[-1, :n] = -c
    for r, col in enumerate(basis):
        if t[-1, col] != 0.0:
            t[-1] -= t[-1, col] * t[r]
    _run(t, basis, n_cols, max_iter)

    y = np.zeros(n_cols)
    for r, col in enumerate(basis):
        y[col] = t[r, -1]
    x = lower + y[:n]
    scale = max(1.0, float(np.abs(b_ub).max(initial=0.0)), float(np.abs(x).max(initial=0.0)))
    if np.any(a_ub @ x - b_ub > FEAS_TOL * scale) or np.any(x < lower - FEAS_TOL * scale) \
            or np.any(x > upper + FEAS_TOL * scale):
        raise NumericalFailure("simplex returned a point violating the constraints")
    x = np.clip(x, lower, upper)
    return x, float(c @ x)
