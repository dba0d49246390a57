import itertools

import numpy as np
import pytest

from oracles import excitation, ising_chain, pauli_string, swap_chain
from robustqaoa import densela, spinmodel
from robustqaoa.errors import ChainTooShort, InvalidAmplitudes, SiteOutOfRange


def test_pauli_site_examples():
    assert np.allclose(spinmodel.pauli_site_operator("z", 1, 2), np.diag([1, 1, -1, -1]))
    ket00 = np.array([1, 0, 0, 0])
    assert np.allclose(spinmodel.pauli_site_operator("x", 2, 2) @ ket00, [0, 1, 0, 0])
    assert np.allclose(spinmodel.pauli_site_operator("y", 1, 1), [[0, -1j], [1j, 0]])


def test_pauli_site_errors():
    with pytest.raises(SiteOutOfRange):
        spinmodel.pauli_site_operator("x", 0, 3)
    with pytest.raises(SiteOutOfRange):
        spinmodel.pauli_site_operator("x", 4, 3)
    with pytest.raises(SiteOutOfRange):
        spinmodel.pauli_site_operator("x", 1, 9)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_pauli_matches_bit_oracle(n):
    for axis in "xyz":
        for k in range(1, n + 1):
            assert np.allclose(spinmodel.pauli_site_operator(axis, k, n), pauli_string({k: axis}, n))


def test_commutation_relations():
    n = 3
    ops = {(a, k): spinmodel.pauli_site_operator(a, k, n) for a in "xyz" for k in range(1, n + 1)}
    for (a, k), (b, l) in itertools.combinations(ops, 2):
        p, q = ops[(a, k)], ops[(b, l)]
        if k != l:
            assert np.abs(p @ q - q @ p).max() < 1e-12
        else:
            assert np.abs(p @ q + q @ p).max() < 1e-12


def test_basis_excitation():
    for n in (3, 5, 7):
        for k in range(1, n + 1):
            assert np.array_equal(spinmodel.basis_excitation(k, n), excitation(k, n))


def test_single_qubit_examples():
    inst = spinmodel.build_single_qubit()
    assert np.allclose(inst.h_a.build((4, -4)), [[-1, 4], [4, 1]])
    assert np.allclose(inst.h_b.build((4, -4)), [[-1, -4], [-4, 1]])
    assert np.allclose(inst.h_a.build((0, 0)), np.diag([-1, 1]))
    assert np.allclose(inst.h_b.build((0, 0)), np.diag([-1, 1]))
    overlap = abs(np.vdot(inst.psi_t, inst.psi_i((4, -4)))) ** 2
    # closed form: ground states of -σᶻ ± 2σˣ are (cos a, ∓ sin a) with tan 2a = 2
    a = 0.5 * np.arctan(2.0)
    assert overlap == pytest.approx(np.cos(2 * a) ** 2, abs=1e-14)
    assert overlap == pytest.approx(0.2, abs=1e-14)
    assert inst.nominal_delta == (4.0, -4.0)


def test_single_qubit_boxes_nested():
    boxes = spinmodel.single_qubit_boxes()
    for (lo1, hi1), (lo2, hi2) in zip(boxes, boxes[1:]):
        assert all(a >= b for a, b in zip(lo1, lo2)) and all(a <= b for a, b in zip(hi1, hi2))
    assert boxes[0] == ((3.9, -4.1), (4.1, -3.9))


def test_chain_one_examples():
    h = spinmodel.chain_one_hamiltonian(3, 0.0)
    assert h[0, 0].real == pytest.approx(-5.0)
    h = spinmodel.chain_one_hamiltonian(3, 0.0, (0.1, 0.0))
    assert h[0, 0].real == pytest.approx(-5.1)
    h = spinmodel.chain_one_hamiltonian(4, 2.0)
    assert densela.is_hermitian(h)
    assert np.abs(h - ising_chain(4, 2.0)).max() < 1e-12


@pytest.mark.parametrize("n", [3, 4, 5])
def test_chain_one_instance(n):
    rng = np.random.default_rng(n)
    inst = spinmodel.build_chain_one(n)
    assert inst.depth == 2 * n and inst.dim == 2**n
    for _ in range(5):
        w = rng.uniform(-0.5, 0.5, 2)
        assert np.abs(inst.h_a.build(w) - ising_chain(n, 4.0, *w)).max() < 1e-12
        assert np.abs(inst.h_b.build(w) - ising_chain(n, -4.0, *w)).max() < 1e-12
    for h_field, psi in ((-2.0, inst.psi_i((0, 0))), (2.0, inst.psi_t)):
        h = ising_chain(n, h_field)
        assert densela.ground_energy(h, psi) == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-10)


def test_chain_two_examples():
    # N=2 precursor: XX + YY acts as twice the swap on {01, 10}
    h2 = swap_chain(2)
    assert np.allclose(h2 @ excitation(1, 2), 2 * excitation(2, 2))
    n = 5
    inst = spinmodel.build_chain_two(n)
    hb = inst.h_b.build((0.0,))
    assert np.allclose(hb @ excitation(n, n), 0)
    assert np.allclose(hb @ excitation(1, n), excitation(1, n))
    m = n // 2
    oracle = swap_chain(n) + 0.15 * pauli_string({m - 1: "z", m: "x", m + 1: "z"}, n)
    ha = inst.h_a.build((0.15,))
    assert densela.is_hermitian(ha) and np.abs(ha - oracle).max() < 1e-12
    assert inst.depth == n + 1


def test_chain_two_short_chain():
    with pytest.raises(ChainTooShort):
        spinmodel.build_chain_two(2)
    with pytest.raises(SiteOutOfRange):
        spinmodel.build_chain_two(8)
    # N = 3 places the three-site term on sites 1, 2, 3
    assert spinmodel.three_site_center(3) == 2
    inst = spinmodel.build_chain_two(3)
    oracle = swap_chain(3) + 0.1 * pauli_string({1: "z", 2: "x", 3: "z"}, 3)
    assert np.abs(inst.h_a.build((0.1,)) - oracle).max() < 1e-12


def test_initial_state_with_error():
    assert np.allclose(spinmodel.initial_state_with_error(7, 0, 0), excitation(1, 7))
    psi = spinmodel.initial_state_with_error(7, 0.5, 0.5)
    assert psi[64] == pytest.approx(np.sqrt(0.5)) and psi[32] == 0.5 and psi[16] == 0.5
    rng = np.random.default_rng(0)
    for _ in range(100):
        r, phi = np.sqrt(rng.uniform()), rng.uniform(0, 2 * np.pi)
        psi = spinmodel.initial_state_with_error(5, r * np.cos(phi), r * np.sin(phi))
        assert abs(np.linalg.norm(psi) - 1) < 1e-12
    with pytest.raises(InvalidAmplitudes):
        spinmodel.initial_state_with_error(5, 0.8, 0.8)


@pytest.mark.parametrize("system,n,box", [
    ("single_qubit", None, ((3.7, -4.3), (4.3, -3.7))),
    ("chain_one", 4, ((-0.5, -0.5), (0.5, 0.5))),
    ("chain_two", 5, ((-0.15,), (0.15,))),
    ("chain_two_init_error", 5, ((0.0, 0.0), (0.5, 0.5))),
])
def test_hamiltonians_hermitian_on_box(system, n, box):
    inst = spinmodel.build_instance(system, n)
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = rng.uniform(*box)
        assert densela.is_hermitian(inst.h_a.build(d)) and densela.is_hermitian(inst.h_b.build(d))
        assert abs(np.linalg.norm(inst.psi_i(d)) - 1) < 1e-10


def test_eig_cache_keys_ignore_irrelevant_components():
    inst = spinmodel.build_chain_two_init_error(4)
    assert inst.h_a.eig((0.1, 0.2)) is inst.h_a.eig((0.3, 0.0))
    inst = spinmodel.build_chain_two(4)
    assert inst.h_b.eig((0.1,)) is inst.h_b.eig((-0.1,))


def test_instance_with_depth():
    inst = spinmodel.build_chain_two(4)
    deeper = inst.with_depth(9)
    assert deeper.depth == 9 and deeper.n_controls == 18
    lo, hi = deeper.theta_bounds()
    assert np.all(lo == 0) and np.all(hi == inst.theta_max)
    with pytest.raises(ValueError):
        inst.with_depth(0)
