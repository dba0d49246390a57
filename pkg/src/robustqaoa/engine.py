"""QAOA propagation, fidelity and its derivatives.

Control vectors are real arrays ordered ``(θ₁ᴬ, θ₁ᴮ, …, θₚᴬ, θₚᴮ)``; the
state after the schedule is::

    |ψ_θ⟩ = U(H_B, θₚᴮ) U(H_A, θₚᴬ) ⋯ U(H_B, θ₁ᴮ) U(H_A, θ₁ᴬ) |ψᵢ(δ)⟩

and the fidelity is ``F = |⟨ψₜ|ψ_θ⟩|²``.

Gradients use one forward sweep over states and one backward sweep over the
co-state ``(U_2p ⋯ U_{j+1})† |ψₜ⟩``.  Each factor is ``exp(-iHθ)`` with a
fixed generator, so ``∂U_j/∂θ_j = -iH_j U_j`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NotSymmetric, StepTooSmall


@dataclass
class FidelityEval:
    value: float
    gradient: np.ndarray
    hess_minus: Optional[np.ndarray] = None


def check_theta(instance, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != instance.n_controls:
        raise DimensionMismatch(
            f"control vector must have length 2p = {instance.n_controls}, got shape {theta.shape}")
    return theta


def _check_delta(instance, delta):
    delta = np.asarray(delta, dtype=float).reshape(-1)
    if delta.shape[0] != instance.delta_dim:
        raise DimensionMismatch(f"δ must have length {instance.delta_dim}, got {delta.shape[0]}")
    return delta


def _factors(instance, delta):
    """Eigendecompositions of ``(H_A(δ), H_B(δ))``."""
    return instance.h_a.eig(delta), instance.h_b.eig(delta)


def propagate(instance, theta, delta):
    """Final state ``|ψ_θ⟩`` for one uncertainty sample."""
    theta = check_theta(instance, theta)
    delta = _check_delta(instance, delta)
    eig_a, eig_b = _factors(instance, delta)
    psi = np.asarray(instance.psi_i(delta), dtype=complex)
    for j, t in enumerate(theta):
        psi = (eig_a if j % 2 == 0 else eig_b).apply_expm(t, psi)
    return psi


def fidelity(instance, theta, delta):
    psi = propagate(instance, theta, delta)
    return float(abs(np.vdot(instance.psi_t, psi)) ** 2)


def _sweep(eig_a, eig_b, theta, states, psi_t, with_gradient):
    """Fidelities (and gradients) for a block of initial states sharing ``H``.

    ``states`` has one initial state per column.  Returns ``(values, grads)``
    with shapes ``(m,)`` and ``(m, 2p)``.
    """
    n = theta.shape[0]
    eigs = [eig_a if j % 2 == 0 else eig_b for j in range(n)]
    phi = states
    forward = []
    for j in range(n):
        phi = eigs[j].apply_expm(theta[j], phi)
        if with_gradient:
            forward.append(phi)
    overlap = psi_t.conj() @ phi
    values = np.abs(overlap) ** 2
    if not with_gradient:
        return values, None
    grads = np.empty((states.shape[1], n))
    chi = psi_t.astype(complex)
    for j in range(n - 1, -1, -1):
        # ⟨χ_j|(-iH_j)|φ_j⟩ = ((iH_j)|χ_j⟩)† |φ_j⟩
        lhs = -eigs[j].apply_generator(chi)
        dc = lhs.conj() @ forward[j]
        grads[:, j] = 2.0 * np.real(overlap.conj() * dc)
        chi = eigs[j].apply_expm(-theta[j], chi)
    return values, grads


def fidelity_gradient(instance, theta, delta):
    """Fidelity and its analytic gradient with respect to ``theta``."""
    theta = check_theta(instance, theta)
    delta = _check_delta(instance, delta)
    eig_a, eig_b = _factors(instance, delta)
    psi = np.asarray(instance.psi_i(delta), dtype=complex)[:, None]
    values, grads = _sweep(eig_a, eig_b, theta, psi, instance.psi_t, True)
    return FidelityEval(float(values[0]), grads[0])


class _StackedEig:
    """Per-sample eigendecompositions stacked along a leading axis."""

    def __init__(self, eigs):
        self.v = np.stack([e.eigenvectors for e in eigs])
        self.vh = np.ascontiguousarray(self.v.conj().transpose(0, 2, 1))
        self.lam = np.stack([e.eigenvalues for e in eigs])

    def apply_expm(self, theta, psi):
        y = np.matmul(self.vh, psi[..., None])[..., 0]
        return np.matmul(self.v, (np.exp(-1j * self.lam * theta) * y)[..., None])[..., 0]

    def apply_generator(self, psi):
        y = np.matmul(self.vh, psi[..., None])[..., 0]
        return np.matmul(self.v, (-1j * self.lam * y)[..., None])[..., 0]


def _sweep_stacked(stack_a, stack_b, theta, states, psi_t, with_gradient):
    """Like :func:`_sweep` but every sample (row of ``states``) has its own ``H``."""
    n = theta.shape[0]
    stacks = [stack_a if j % 2 == 0 else stack_b for j in range(n)]
    phi = states
    forward = []
    for j in range(n):
        phi = stacks[j].apply_expm(theta[j], phi)
        if with_gradient:
            forward.append(phi)
    overlap = phi @ psi_t.conj()
    values = np.abs(overlap) ** 2
    if not with_gradient:
        return values, None
    grads = np.empty((states.shape[0], n))
    chi = np.broadcast_to(psi_t, states.shape).astype(complex)
    for j in range(n - 1, -1, -1):
        lhs = -stacks[j].apply_generator(chi)
        dc = np.sum(lhs.conj() * forward[j], axis=1)
        grads[:, j] = 2.0 * np.real(overlap.conj() * dc)
        chi = stacks[j].apply_expm(-theta[j], chi)
    return values, grads


class SampleBatch:
    """A fixed list of uncertainty samples prepared for repeated evaluation.

    When every sample shares one Hamiltonian pair (only the initial state is
    uncertain) the states are propagated together as matrix columns;
    otherwise the per-sample eigendecompositions are stacked and applied
    with batched matrix products.
    """

    def __init__(self, instance, deltas):
        self.instance = instance
        self.deltas = [_check_delta(instance, d) for d in deltas]
        if not self.deltas:
            raise ValueError("need at least one sample")
        keys = [(instance.h_a.key(d), instance.h_b.key(d)) for d in self.deltas]
        self.states = np.stack([np.asarray(instance.psi_i(d), dtype=complex) for d in self.deltas])
        self.shared = len(set(keys)) == 1
        if self.shared:
            self.eig_a, self.eig_b = _factors(instance, self.deltas[0])
            self.columns = np.ascontiguousarray(self.states.T)
        else:
            self.stack_a = _StackedEig([instance.h_a.eig(d) for d in self.deltas])
            self.stack_b = _StackedEig([instance.h_b.eig(d) for d in self.deltas])

    def __len__(self):
        return len(self.deltas)

    def evaluate(self, theta, with_gradient=True):
        theta = check_theta(self.instance, theta)
        psi_t = self.instance.psi_t
        if self.shared:
            return _sweep(self.eig_a, self.eig_b, theta, self.columns, psi_t, with_gradient)
        return _sweep_stacked(self.stack_a, self.stack_b, theta, self.states, psi_t, with_gradient)


def evaluate_samples(instance, theta, deltas, with_gradient=True):
    """Fidelities ``(L,)`` and gradients ``(L, 2p)`` over a list of samples, in input order."""
    return SampleBatch(instance, deltas).evaluate(theta, with_gradient)


def fidelity_hessian_fd(instance, theta, delta, step=1e-4):
    """Symmetrized central-difference Hessian of the analytic gradient."""
    if step < 1e-9:
        raise StepTooSmall(f"finite-difference step {step:g} < 1e-9")
    theta = check_theta(instance, theta)
    n = theta.shape[0]
    hess = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        g_plus = fidelity_gradient(instance, theta + e, delta).gradient
        g_minus = fidelity_gradient(instance, theta - e, delta).gradient
        hess[:, k] = (g_plus - g_minus) / (2.0 * step)
    return 0.5 * (hess + hess.T)


def negative_semidefinite_part(h, tol=1e-10):
    """``V diag(min(λ, 0)) Vᵀ`` for a real symmetric matrix."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {h.shape}")
    if np.max(np.abs(h - h.T), initial=0.0) > tol * max(1.0, np.max(np.abs(h), initial=0.0)):
        raise NotSymmetric("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (h + h.T))
    out = (v * np.minimum(w, 0.0)) @ v.T
    return 0.5 * (out + out.T)


def fidelity_eval(instance, theta, delta, with_hessian=False, step=1e-4):
    """Value, gradient and optionally the negative-semidefinite Hessian part."""
    ev = fidelity_gradient(instance, theta, delta)
    if with_hessian:
        ev.hess_minus = negative_semidefinite_part(fidelity_hessian_fd(instance, theta, delta, step))
    return ev
