"""Built-in invariant suite (``robustqaoa selftest``).

Each check is seeded, independent of the others, and compares the library
against an oracle that shares no code with the path under test: central
finite differences for gradients, a truncated Taylor series for ``expm``,
vertex enumeration for the LPs, and a synthetic linear problem whose SCP
trajectory is known in closed form.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import densela, engine, optimizers, spinmodel, subproblem, uncertainty

# small instances covering every benchmark family (N <= 5)
SELFTEST_SYSTEMS = (
    ("single_qubit", None, 5, uncertainty.UncertaintyBox((3.7, -4.3), (4.3, -3.7))),
    ("chain_one", 3, 6, uncertainty.UncertaintyBox((-0.3, -0.3), (0.3, 0.3))),
    ("chain_two", 5, 6, uncertainty.UncertaintyBox((-0.15,), (0.15,))),
    ("chain_two_init_error", 5, 6, uncertainty.UncertaintyBox((0.0, 0.0), (0.3, 0.3))),
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _instances():
    for system, n, p, box in SELFTEST_SYSTEMS:
        yield spinmodel.build_instance(system, n, p), box


def _random_point(inst, box, rng):
    theta = rng.uniform(0.0, inst.theta_max, inst.n_controls)
    delta = rng.uniform(box.lower, box.upper)
    return theta, delta


def _fd_gradient(inst, theta, delta, h):
    grad = np.empty_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = h
        grad[k] = (engine.fidelity(inst, theta + e, delta) - engine.fidelity(inst, theta - e, delta)) / (2 * h)
    return grad


def check_gradient(samples=20, h=1e-5, tol=1e-6, seed=1):
    """Adjoint gradient against central differences of the fidelity."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for inst, box in _instances():
        for _ in range(samples):
            theta, delta = _random_point(inst, box, rng)
            analytic = engine.fidelity_gradient(inst, theta, delta).gradient
            fd = _fd_gradient(inst, theta, delta, h)
            rel = np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12)
            worst = max(worst, rel)
    return worst < tol, f"max relative l2 error {worst:.2e} (tol {tol:g})"


def check_unitarity(propagations=100, unitaries=50, tol=1e-10, seed=2):
    """State norms after propagation and ``U U†`` for random Hermitian ``H``."""
    rng = np.random.default_rng(seed)
    norm_err = 0.0
    for inst, box in _instances():
        for _ in range(propagations):
            theta, delta = _random_point(inst, box, rng)
            norm_err = max(norm_err, abs(np.linalg.norm(engine.propagate(inst, theta, delta)) - 1.0))
    unit_err = 0.0
    for _ in range(unitaries):
        dim = int(rng.integers(2, 33))
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = 0.5 * (m + m.conj().T)
        u = densela.unitary_from_hamiltonian(h, rng.uniform(-10, 10))
        unit_err = max(unit_err, np.abs(u @ u.conj().T - np.eye(dim)).max())
    ok = norm_err < tol and unit_err < tol
    return ok, f"norm drift {norm_err:.1e}, |UU†-I| {unit_err:.1e} (tol {tol:g})"


def vertex_lp_max(c, a_ub, b_ub, lower, upper, tol=1e-9):
    """Maximum of a bounded LP by enumerating every basic solution."""
    n = c.shape[0]
    rows = np.vstack([a_ub, np.eye(n), -np.eye(n)])
    rhs = np.concatenate([b_ub, upper, -lower])
    best = -np.inf
    for subset in itertools.combinations(range(rows.shape[0]), n):
        a = rows[list(subset)]
        if abs(np.linalg.det(a)) < 1e-12:
            continue
        x = np.linalg.solve(a, rhs[list(subset)])
        if np.all(rows @ x <= rhs + tol * max(1.0, np.abs(rhs).max())):
            best = max(best, float(c @ x))
    return best


def random_epigraph(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 7))
    theta_max = 2.0
    theta = rng.uniform(0.0, theta_max, n)
    trust = subproblem.TrustRegion(rng.uniform(0.05, 1.5))
    surrogates = [subproblem.LinearSurrogate(rng.uniform(0.0, 1.0), rng.normal(size=n)) for _ in range(m)]
    return subproblem.build_epigraph(surrogates, theta, np.zeros(n), np.full(n, theta_max), trust)


def check_lp(count=200, tol=1e-9, seed=3):
    """Epigraph LP optimum against vertex enumeration."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        lp = random_epigraph(rng)
        _, value = subproblem.solve_lp(lp)
        oracle = vertex_lp_max(*lp.standard_form())
        worst = max(worst, abs(value - oracle))
    return worst < tol, f"max |objective - oracle| {worst:.1e} over {count} LPs (tol {tol:g})"


def check_scp_linear(iterations=12):
    """On ``min(θ₁ + θ₂, θ₁ - θ₂)`` every step is exact: σ = 1 and d doubles."""
    cfg = optimizers.ScpConfig(t_max=iterations, tol_sigma=0.0)
    grads = np.array([[1.0, 1.0], [1.0, -1.0]])
    evaluate = lambda th: (grads @ th, grads.copy())
    big = 1e6
    _, trace = optimizers.scp_maximize_min(evaluate, np.zeros(2), np.full(2, -big), np.full(2, big), cfg)
    sig_err = max(abs(r.sigma - 1.0) for r in trace.iterations)
    d_ok = all(r.d == cfg.initial_d * cfg.gamma1 ** r.t for r in trace.iterations)
    ok = len(trace.iterations) == iterations and sig_err < 1e-9 and d_ok and trace.n_accepted == iterations
    return ok, f"{len(trace.iterations)} iterations, max |σ-1| {sig_err:.1e}, d doubling exact: {d_ok}"


def check_scp_monotone(t_max=60, seed=4):
    """Short SCP runs on every benchmark; ScpTrace asserts accepted worst cases never drop."""
    rng = np.random.default_rng(seed)
    runs = 0
    for inst, box in _instances():
        theta0 = rng.uniform(0.0, 1.0, inst.n_controls)
        train = uncertainty.sample_grid(box, 3)
        _, trace = optimizers.scp_optimize(inst, theta0, train, optimizers.ScpConfig(t_max=t_max))
        accepted = [trace.initial_worst] + [r.worst for r in trace.iterations if r.accepted]
        if any(b < a for a, b in zip(accepted, accepted[1:])):
            return False, f"{inst.name}: accepted worst case decreased"
        runs += 1
    return True, f"{runs} benchmark runs with non-decreasing accepted worst case"


def _taylor_expm(a, terms=80):
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def check_expm_and_eig(seed=5):
    """Spectral ``exp(-iHθ)`` against Taylor; Jacobi against LAPACK."""
    rng = np.random.default_rng(seed)
    expm_err, eig_err = 0.0, 0.0
    for _ in range(10):
        dim = int(rng.integers(2, 17))
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = 0.25 * (m + m.conj().T)
        theta = rng.uniform(-1.0, 1.0)
        expm_err = max(expm_err, np.abs(densela.unitary_from_hamiltonian(h, theta) - _taylor_expm(-1j * theta * h)).max())
        jac = densela.hermitian_eig(h, method="jacobi")
        lap = densela.hermitian_eig(h)
        eig_err = max(eig_err, np.abs(jac.eigenvalues - lap.eigenvalues).max(),
                      np.abs(jac.reconstruct() - h).max())
    ok = expm_err < 1e-10 and eig_err < 1e-10
    return ok, f"expm vs Taylor {expm_err:.1e}, Jacobi vs LAPACK {eig_err:.1e}"


def check_hamiltonians():
    """Affine Hamiltonians are Hermitian at random δ and match the dense chain I builder."""
    rng = np.random.default_rng(6)
    err = 0.0
    for inst, box in _instances():
        for _ in range(5):
            delta = rng.uniform(box.lower, box.upper)
            for ham in (inst.h_a, inst.h_b):
                h = ham.build(delta)
                if not densela.is_hermitian(h):
                    return False, f"{inst.name}: non-Hermitian Hamiltonian"
    for n in (3, 4):
        param = spinmodel.chain_one_param(n, 4.0)
        for _ in range(3):
            delta = rng.uniform(-0.5, 0.5, 2)
            err = max(err, np.abs(param.build(delta) - spinmodel.chain_one_hamiltonian(n, 4.0, delta)).max())
    return err < 1e-12, f"all sampled Hamiltonians Hermitian; chain I builders agree to {err:.1e}"


def check_hessian_part(seed=7):
    """The negative-semidefinite part is NSD and agrees with H where H is already NSD."""
    rng = np.random.default_rng(seed)
    for _ in range(20):
        n = int(rng.integers(1, 8))
        m = rng.normal(size=(n, n))
        h = m + m.T
        neg = engine.negative_semidefinite_part(h)
        if np.linalg.eigvalsh(neg).max() > 1e-10:
            return False, "result has a positive eigenvalue"
        nsd = -m @ m.T
        if np.abs(engine.negative_semidefinite_part(nsd) - nsd).max() > 1e-10 * max(1.0, np.abs(nsd).max()):
            return False, "NSD input was modified"
    return True, "20 random symmetric matrices"


def check_sampling():
    """Grids contain every corner, are duplicate-free and respect the sample cap."""
    box = uncertainty.UncertaintyBox((-1.0, 2.0), (1.0, 3.0))
    grid = uncertainty.sample_grid(box, 9)
    corners = set(itertools.product(*zip(box.lower, box.upper)))
    ok = len(grid) == 81 and corners <= set(grid.samples)
    try:
        uncertainty.sample_grid(box, 101)
        ok = False
    except uncertainty.TooManySamples:
        pass
    return ok, "9x9 grid has 81 points including all corners; 101x101 rejected"


CHECKS = (
    ("gradient vs finite differences", check_gradient),
    ("unitarity and normalization", check_unitarity),
    ("epigraph LP vs vertex enumeration", check_lp),
    ("SCP exact-linear trajectory", check_scp_linear),
    ("SCP monotone accepted worst case", check_scp_monotone),
    ("expm and Jacobi eigensolver", check_expm_and_eig),
    ("benchmark Hamiltonians", check_hamiltonians),
    ("negative-semidefinite Hessian part", check_hessian_part),
    ("uncertainty grids", check_sampling),
)


def run_selftest(stream=None):
    """Run every check; returns the list of :class:`CheckResult`."""
    results = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not an aborted suite
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return results
