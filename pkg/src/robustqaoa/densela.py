"""Dense complex linear algebra for small Hermitian operators.

Matrices are plain ``numpy`` complex arrays.  Two diagonalizers are
available: LAPACK (``numpy.linalg.eigh``, the default) and a cyclic
complex Jacobi iteration written here.  Every propagator in the package is
built from an eigendecomposition, so :class:`EigDecomposition` carries the
helpers for ``exp(-iHθ)`` and its action on vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGroundState, NoConvergence, NotHermitian

HERMITIAN_TOL = 1e-12
GAP_TOL = 1e-10
MAX_DIM = 1024
JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True, eq=False)
class EigDecomposition:
    """Eigenvalues in ascending order and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def expm(self, theta):
        """Return ``exp(-i H theta)`` as a dense matrix."""
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * theta)) @ v.conj().T

    def apply_expm(self, theta, psi):
        """Apply ``exp(-i H theta)`` to a vector (or the columns of a matrix)."""
        v = self.eigenvectors
        phases = np.exp(-1j * self.eigenvalues * theta)
        if psi.ndim == 2:
            phases = phases[:, None]
        return v @ (phases * (v.conj().T @ psi))

    def apply_generator(self, psi):
        """Apply ``-i H`` to a vector (or the columns of a matrix)."""
        v = self.eigenvectors
        lam = -1j * self.eigenvalues
        if psi.ndim == 2:
            lam = lam[:, None]
        return v @ (lam * (v.conj().T @ psi))


def is_hermitian(a, tol=HERMITIAN_TOL):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def check_hermitian(a, tol=HERMITIAN_TOL):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {a.shape}")
    err = np.max(np.abs(a - a.conj().T), initial=0.0)
    if err > tol:
        raise NotHermitian(f"max |A - A^H| = {err:.3e} exceeds {tol:.0e}")
    return a


def hermitian_eig(a, method="lapack"):
    """Diagonalize a Hermitian matrix.

    Args:
        a: square complex array, Hermitian to within ``HERMITIAN_TOL``.
        method: ``"lapack"`` or ``"jacobi"``.

    Returns:
        EigDecomposition with ascending eigenvalues.
    """
    a = check_hermitian(a)
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    # exact Hermitian part, so tiny asymmetries do not leak into the result
    a = 0.5 * (a + a.conj().T)
    if method == "lapack":
        w, v = np.linalg.eigh(a)
    elif method == "jacobi":
        w, v = jacobi_eig(a)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EigDecomposition(np.ascontiguousarray(w), np.ascontiguousarray(v))


def jacobi_eig(a, tol=1e-15, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Each rotation first removes the phase of the pivot ``A[p, q]`` and then
    applies a real Givens rotation that zeroes it.  Sweeps continue until the
    off-diagonal Frobenius norm falls below ``tol * ||A||_F``.

    Returns:
        (eigenvalues ascending, eigenvector columns)
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    converged = n < 2
    for _ in range(max_sweeps):
        off = _off_diagonal_norm(a)
        if off <= tol * scale:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                t = 0.5 * math.atan2(2.0 * r, a[p, p].real - a[q, q].real)
                c, s = math.cos(t), math.sin(t)
                # G = diag(1, conj(phase)) @ [[c, -s], [s, c]]
                g = np.array([[c, -s], [s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ g
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    if not converged:
        off = _off_diagonal_norm(a)
        if off > tol * scale:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _off_diagonal_norm(a):
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def unitary_from_hamiltonian(h, theta, method="lapack"):
    """``exp(-i h theta)`` via the eigendecomposition of ``h``."""
    return hermitian_eig(h, method=method).expm(theta)


def ground_state(h, method="lapack", decomposition=None):
    """Lowest-energy eigenvector with a fixed global phase.

    The largest-magnitude entry is made real and positive.

    Raises:
        DegenerateGroundState: the two lowest eigenvalues are within ``GAP_TOL``.
    """
    eig = decomposition if decomposition is not None else hermitian_eig(h, method=method)
    w = eig.eigenvalues
    if w.shape[0] > 1 and w[1] - w[0] <= GAP_TOL:
        raise DegenerateGroundState(f"ground-state gap {w[1] - w[0]:.3e} <= {GAP_TOL:.0e}")
    psi = eig.eigenvectors[:, 0].copy()
    k = int(np.argmax(np.abs(psi)))
    psi *= abs(psi[k]) / psi[k]
    return psi / np.linalg.norm(psi)


def ground_energy(h, psi):
    return float(np.real(np.vdot(psi, h @ psi)))
