"""Pauli operators and the three benchmark problems.

Qubit 1 is the leftmost tensor factor (most significant bit of the basis
index).  ``σᶻ = diag(1, -1)`` and ``|0⟩ = (1, 0)``, so the single-excitation
state with site ``k`` flipped has basis index ``2**(N - k)``.

Every Hamiltonian here is affine in the uncertainty vector ``δ``::

    H(δ) = constant + Σ_k δ[k] * terms[k]

which :class:`ParamHamiltonian` stores directly.  A ``None`` term means the
operator does not depend on that component, and its eigendecomposition is
shared by every ``δ`` that differs only there.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import densela
from .errors import ChainTooShort, InvalidAmplitudes, SiteOutOfRange

MAX_SITES = 8
DEFAULT_THETA_MAX = 2.0 * math.pi

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_site_operator(axis, site, n_sites):
    """``I ⊗ … ⊗ σ^axis ⊗ … ⊗ I`` with the Pauli matrix at 1-based ``site``."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be one of x, y, z (got {axis!r})")
    if not 1 <= n_sites <= MAX_SITES:
        raise SiteOutOfRange(f"chain length {n_sites} outside [1, {MAX_SITES}]")
    if not 1 <= site <= n_sites:
        raise SiteOutOfRange(f"site {site} outside [1, {n_sites}]")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_sites - site), dtype=complex)
    return np.kron(np.kron(left, PAULI[axis]), right)


def pauli_product(ops, n_sites):
    """Product of site operators, e.g. ``[("z", 1), ("x", 2)]``."""
    out = np.eye(2**n_sites, dtype=complex)
    for axis, site in ops:
        out = out @ pauli_site_operator(axis, site, n_sites)
    return out


def basis_excitation(site, n_sites):
    """``|k̄⟩``: all qubits ``|0⟩`` except ``|1⟩`` at ``site``."""
    if not 1 <= site <= n_sites:
        raise SiteOutOfRange(f"site {site} outside [1, {n_sites}]")
    psi = np.zeros(2**n_sites, dtype=complex)
    psi[2 ** (n_sites - site)] = 1.0
    return psi


@dataclass(frozen=True, eq=False)
class ParamHamiltonian:
    """Hermitian operator affine in the uncertainty vector."""

    constant: np.ndarray
    terms: tuple = ()
    nominal_delta: tuple = ()
    eig_method: str = "lapack"

    def __post_init__(self):
        densela.check_hermitian(self.constant)
        for t in self.terms:
            if t is not None:
                densela.check_hermitian(t)
        if len(self.nominal_delta) != len(self.terms):
            raise ValueError("nominal_delta and terms must have the same length")
        # bounded per-instance cache; lru_cache is safe for concurrent use
        object.__setattr__(self, "_eig_cached", functools.lru_cache(maxsize=512)(self._eig_uncached))

    @property
    def dim(self):
        return self.constant.shape[0]

    @property
    def is_constant(self):
        return all(t is None for t in self.terms)

    def key(self, delta):
        """Components of ``delta`` this operator actually depends on."""
        delta = np.asarray(delta, dtype=float).reshape(-1)
        if delta.shape[0] != len(self.terms):
            raise ValueError(f"expected δ of length {len(self.terms)}, got {delta.shape[0]}")
        return tuple(float(d) for d, t in zip(delta, self.terms) if t is not None)

    def build(self, delta):
        delta = np.asarray(delta, dtype=float).reshape(-1)
        if delta.shape[0] != len(self.terms):
            raise ValueError(f"expected δ of length {len(self.terms)}, got {delta.shape[0]}")
        h = self.constant.copy()
        for d, t in zip(delta, self.terms):
            if t is not None and d != 0.0:
                h = h + d * t
        return h

    def nominal(self):
        return self.build(self.nominal_delta)

    def eig(self, delta):
        """Cached eigendecomposition of ``build(delta)``."""
        return self._eig_cached(self.key(delta))

    def _eig_uncached(self, key):
        h = self.constant.copy()
        for d, t in zip(key, (t for t in self.terms if t is not None)):
            if d != 0.0:
                h = h + d * t
        return densela.hermitian_eig(h, method=self.eig_method)


@dataclass(frozen=True, eq=False)
class FixedState:
    """Initial state that does not depend on the uncertainty."""

    vector: np.ndarray

    def __call__(self, delta):
        return self.vector

    def key(self, delta):
        return ()


@dataclass(frozen=True, eq=False)
class ExcitationMixture:
    """``√(1-ω₂²-ω₃²)|1̄⟩ + ω₂|2̄⟩ + ω₃|3̄⟩`` with ``δ = (ω₂, ω₃)``."""

    n_sites: int

    def __call__(self, delta):
        w2, w3 = (float(x) for x in np.asarray(delta, dtype=float).reshape(-1))
        return initial_state_with_error(self.n_sites, w2, w3)

    def key(self, delta):
        return tuple(float(x) for x in np.asarray(delta, dtype=float).reshape(-1))


@dataclass(frozen=True, eq=False)
class QaoaInstance:
    """A complete state-transfer problem.

    ``psi_i`` maps an uncertainty sample to the initial state, ``psi_t`` is
    fixed.  Controls live in the box ``[0, theta_max]^(2 * depth)``.
    """

    name: str
    h_a: ParamHamiltonian
    h_b: ParamHamiltonian
    psi_i: Callable
    psi_t: np.ndarray
    depth: int
    nominal_delta: tuple
    theta_max: float = DEFAULT_THETA_MAX
    n_sites: int = 1

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not self.theta_max > 0:
            raise ValueError("theta_max must be > 0")
        if self.h_a.dim != self.h_b.dim or self.psi_t.shape != (self.h_a.dim,):
            raise ValueError("inconsistent operator/state dimensions")
        if abs(np.linalg.norm(self.psi_t) - 1.0) > 1e-10:
            raise ValueError("target state is not normalized")

    @property
    def dim(self):
        return self.h_a.dim

    @property
    def n_controls(self):
        return 2 * self.depth

    @property
    def delta_dim(self):
        return len(self.nominal_delta)

    def theta_bounds(self):
        n = self.n_controls
        return np.zeros(n), np.full(n, float(self.theta_max))

    def with_depth(self, depth):
        return QaoaInstance(self.name, self.h_a, self.h_b, self.psi_i, self.psi_t, depth,
                            self.nominal_delta, self.theta_max, self.n_sites)

    def with_theta_max(self, theta_max):
        return QaoaInstance(self.name, self.h_a, self.h_b, self.psi_i, self.psi_t, self.depth,
                            self.nominal_delta, theta_max, self.n_sites)


def _check_chain(n_sites):
    if n_sites < 3:
        raise ChainTooShort(f"chain needs at least 3 sites (got {n_sites})")
    if n_sites > 7:
        raise SiteOutOfRange(f"chain length {n_sites} exceeds 7")


# --- single qubit -----------------------------------------------------------

SINGLE_QUBIT_NOMINAL = (4.0, -4.0)


def single_qubit_boxes():
    """Nested boxes Δ₁ ⊂ Δ₂ ⊂ Δ₃ centred on the nominal point."""
    boxes = []
    for k in (1, 2, 3):
        r = 0.1 * k
        boxes.append(((4.0 - r, -4.0 - r), (4.0 + r, -4.0 + r)))
    return boxes


def build_single_qubit(depth=5, theta_max=DEFAULT_THETA_MAX):
    """``H_A = -σᶻ + ω_A σˣ``, ``H_B = -σᶻ + ω_B σˣ`` with ``δ = (ω_A, ω_B)``."""
    sx, sz = PAULI["x"], PAULI["z"]
    h_a = ParamHamiltonian(-sz, (sx, None), SINGLE_QUBIT_NOMINAL)
    h_b = ParamHamiltonian(-sz, (None, sx), SINGLE_QUBIT_NOMINAL)
    psi_i = densela.ground_state(-sz + 2 * sx)
    psi_t = densela.ground_state(-sz - 2 * sx)
    return QaoaInstance("single_qubit", h_a, h_b, FixedState(psi_i), psi_t, depth,
                        SINGLE_QUBIT_NOMINAL, theta_max, 1)


# --- chain I: transverse-field Ising with uncertain couplings ---------------

def chain_one_hamiltonian(n_sites, h, delta=(0.0, 0.0)):
    """Dense ``H(h; ω₁, ω₂)``; used as the independent reference in tests."""
    w1, w2 = delta
    zz = lambda j: pauli_product([("z", j), ("z", j + 1)], n_sites)
    out = -(1 + w1) * zz(1) - (1 + w2) * zz(2)
    for j in range(3, n_sites):
        out = out - zz(j)
    for j in range(1, n_sites + 1):
        out = out - pauli_site_operator("z", j, n_sites) - h * pauli_site_operator("x", j, n_sites)
    return out


def chain_one_param(n_sites, h):
    _check_chain(n_sites)
    zz1 = pauli_product([("z", 1), ("z", 2)], n_sites)
    zz2 = pauli_product([("z", 2), ("z", 3)], n_sites)
    return ParamHamiltonian(chain_one_hamiltonian(n_sites, h), (-zz1, -zz2), (0.0, 0.0))


def build_chain_one(n_sites, h_plus=4.0, h_minus=-4.0, depth=None, theta_max=DEFAULT_THETA_MAX):
    """Ising chain with uncertain first two couplings, ``δ = (ω₁, ω₂)``.

    ``H_A`` uses field ``h_plus`` and ``H_B`` field ``h_minus``.  The initial
    and target states are the uncertainty-free ground states at ``h = -2``
    and ``h = +2``.
    """
    _check_chain(n_sites)
    depth = 2 * n_sites if depth is None else depth
    psi_i = densela.ground_state(chain_one_hamiltonian(n_sites, -2.0))
    psi_t = densela.ground_state(chain_one_hamiltonian(n_sites, 2.0))
    return QaoaInstance("chain_one", chain_one_param(n_sites, h_plus), chain_one_param(n_sites, h_minus),
                        FixedState(psi_i), psi_t, depth, (0.0, 0.0), theta_max, n_sites)


# --- chain II: excitation transfer ------------------------------------------

def three_site_center(n_sites):
    """Middle site of the ``σᶻσˣσᶻ`` error term.

    ``⌊N/2⌋`` for ``N >= 4``.  For ``N = 3`` that would put a factor on site 0,
    so the only interior site, 2, is used instead.
    """
    return max(n_sites // 2, 2)


def swap_chain(n_sites):
    out = np.zeros((2**n_sites, 2**n_sites), dtype=complex)
    for i in range(1, n_sites):
        out += pauli_product([("x", i), ("x", i + 1)], n_sites)
        out += pauli_product([("y", i), ("y", i + 1)], n_sites)
    return out


def three_site_term(n_sites):
    m = three_site_center(n_sites)
    return pauli_product([("z", m - 1), ("x", m), ("z", m + 1)], n_sites)


def target_projector(n_sites):
    """``(σᶻ_N + I) / 2``."""
    return 0.5 * (pauli_site_operator("z", n_sites, n_sites) + np.eye(2**n_sites))


def build_chain_two(n_sites, depth=None, theta_max=DEFAULT_THETA_MAX):
    """Excitation transfer ``|1̄⟩ → |N̄⟩`` with an uncertain three-qubit term."""
    _check_chain(n_sites)
    depth = n_sites + 1 if depth is None else depth
    h_a = ParamHamiltonian(swap_chain(n_sites), (three_site_term(n_sites),), (0.0,))
    h_b = ParamHamiltonian(target_projector(n_sites), (None,), (0.0,))
    return QaoaInstance("chain_two", h_a, h_b, FixedState(basis_excitation(1, n_sites)),
                        basis_excitation(n_sites, n_sites), depth, (0.0,), theta_max, n_sites)


def initial_state_with_error(n_sites, omega2, omega3):
    """``√(1-ω₂²-ω₃²)|1̄⟩ + ω₂|2̄⟩ + ω₃|3̄⟩``."""
    weight = omega2 * omega2 + omega3 * omega3
    if weight > 1.0:
        raise InvalidAmplitudes(f"ω₂² + ω₃² = {weight:.6g} > 1")
    return (np.sqrt(1.0 - weight) * basis_excitation(1, n_sites)
            + omega2 * basis_excitation(2, n_sites)
            + omega3 * basis_excitation(3, n_sites))


def build_chain_two_init_error(n_sites, depth=None, theta_max=DEFAULT_THETA_MAX):
    """Chain II with exact Hamiltonians and an uncertain initial state, ``δ = (ω₂, ω₃)``."""
    _check_chain(n_sites)
    depth = n_sites + 1 if depth is None else depth
    h_a = ParamHamiltonian(swap_chain(n_sites), (None, None), (0.0, 0.0))
    h_b = ParamHamiltonian(target_projector(n_sites), (None, None), (0.0, 0.0))
    return QaoaInstance("chain_two_init_error", h_a, h_b, ExcitationMixture(n_sites),
                        basis_excitation(n_sites, n_sites), depth, (0.0, 0.0), theta_max, n_sites)


SYSTEMS = ("single_qubit", "chain_one", "chain_two", "chain_two_init_error")


def build_instance(system, n_sites=None, depth=None, theta_max=DEFAULT_THETA_MAX):
    if system == "single_qubit":
        return build_single_qubit(depth=5 if depth is None else depth, theta_max=theta_max)
    if system == "chain_one":
        return build_chain_one(n_sites, depth=depth, theta_max=theta_max)
    if system == "chain_two":
        return build_chain_two(n_sites, depth=depth, theta_max=theta_max)
    if system == "chain_two_init_error":
        return build_chain_two_init_error(n_sites, depth=depth, theta_max=theta_max)
    raise ValueError(f"unknown system {system!r}")
