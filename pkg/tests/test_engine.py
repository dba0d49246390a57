import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import direct_propagate, fd_gradient
from robustqaoa import engine, spinmodel
from robustqaoa.errors import DimensionMismatch, NotSymmetric, StepTooSmall

SYSTEMS = [
    (spinmodel.build_single_qubit(5), ((3.7, -4.3), (4.3, -3.7))),
    (spinmodel.build_chain_one(3), ((-0.3, -0.3), (0.3, 0.3))),
    (spinmodel.build_chain_two(5), ((-0.15,), (0.15,))),
    (spinmodel.build_chain_two_init_error(5), ((0.0, 0.0), (0.3, 0.3))),
]
IDS = ["single_qubit", "chain_one", "chain_two", "chain_two_init_error"]


def random_point(inst, box, rng):
    return rng.uniform(0, inst.theta_max, inst.n_controls), rng.uniform(*box)


def test_zero_controls_return_initial_state():
    for inst, box in SYSTEMS:
        d = np.array(box[0])
        assert np.allclose(engine.propagate(inst, np.zeros(inst.n_controls), d), inst.psi_i(d))


def test_fidelity_examples():
    inst = spinmodel.build_chain_two(5)
    assert engine.fidelity(inst, np.zeros(12), (0.0,)) == pytest.approx(0.0, abs=1e-15)
    sq = spinmodel.build_single_qubit(5)
    assert engine.fidelity(sq, np.zeros(10), (4, -4)) == pytest.approx(0.2, abs=1e-14)
    # psi_i = psi_t: a chain II instance whose target is the initial state
    same = spinmodel.QaoaInstance("same", inst.h_a, inst.h_b, inst.psi_i, inst.psi_i((0.0,)), 2, (0.0,))
    assert engine.fidelity(same, np.zeros(4), (0.0,)) == pytest.approx(1.0)


def test_single_qubit_closed_form_rotation():
    # p = 1, θ = (θ_A, 0): a single rotation exp(-iθ_A H_A) with H_A = -σᶻ + 4σˣ
    inst = spinmodel.build_single_qubit(1)
    t = np.pi / 2
    omega = np.sqrt(17.0)
    ha = np.array([[-1, 4], [4, 1]], dtype=complex)
    u = np.cos(omega * t) * np.eye(2) - 1j * np.sin(omega * t) * ha / omega
    assert np.allclose(engine.propagate(inst, [t, 0.0], (4, -4)), u @ inst.psi_i((4, -4)), atol=1e-13)


def test_single_qubit_p1_closed_form_gradient():
    inst = spinmodel.build_single_qubit(1)
    omega = np.sqrt(17.0)
    ha = np.array([[-1, 4], [4, 1]], dtype=complex)
    hb = np.array([[-1, -4], [-4, 1]], dtype=complex)
    rot = lambda h, t: np.cos(omega * t) * np.eye(2) - 1j * np.sin(omega * t) * h / omega
    drot = lambda h, t: omega * (-np.sin(omega * t) * np.eye(2) - 1j * np.cos(omega * t) * h / omega)
    psi, tgt = inst.psi_i((4, -4)), inst.psi_t
    ta, tb = 0.37, 1.21
    c = tgt.conj() @ rot(hb, tb) @ rot(ha, ta) @ psi
    dca = tgt.conj() @ rot(hb, tb) @ drot(ha, ta) @ psi
    dcb = tgt.conj() @ drot(hb, tb) @ rot(ha, ta) @ psi
    expected = [2 * np.real(np.conj(c) * dca), 2 * np.real(np.conj(c) * dcb)]
    ev = engine.fidelity_gradient(inst, [ta, tb], (4, -4))
    assert ev.value == pytest.approx(abs(c) ** 2, abs=1e-14)
    assert np.allclose(ev.gradient, expected, atol=1e-12)


@pytest.mark.parametrize("inst,box", SYSTEMS, ids=IDS)
def test_propagation_matches_taylor_oracle(inst, box):
    rng = np.random.default_rng(0)
    theta, d = random_point(inst, box, rng)
    ref = direct_propagate(inst.h_a.build(d), inst.h_b.build(d), inst.psi_i(d).astype(complex), theta)
    assert np.abs(engine.propagate(inst, theta, d) - ref).max() < 1e-9


@pytest.mark.parametrize("inst,box", SYSTEMS, ids=IDS)
def test_gradient_matches_finite_differences(inst, box):
    rng = np.random.default_rng(1)
    for _ in range(20):
        theta, d = random_point(inst, box, rng)
        analytic = engine.fidelity_gradient(inst, theta, d).gradient
        fd = fd_gradient(lambda th: engine.fidelity(inst, th, d), theta)
        assert np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-6


def test_gradient_vanishes_at_perfect_fidelity():
    inst = spinmodel.build_chain_two(4)
    same = spinmodel.QaoaInstance("same", inst.h_a, inst.h_b, inst.psi_i, inst.psi_i((0.0,)), 3, (0.0,))
    ev = engine.fidelity_gradient(same, np.zeros(6), (0.0,))
    assert ev.value == pytest.approx(1.0) and np.abs(ev.gradient).max() < 1e-12


@pytest.mark.parametrize("inst,box", SYSTEMS, ids=IDS)
def test_batch_matches_per_sample(inst, box):
    rng = np.random.default_rng(2)
    theta = rng.uniform(0, 2, inst.n_controls)
    deltas = [rng.uniform(*box) for _ in range(7)]
    values, grads = engine.evaluate_samples(inst, theta, deltas)
    for d, v, g in zip(deltas, values, grads):
        ev = engine.fidelity_gradient(inst, theta, d)
        assert v == pytest.approx(ev.value, abs=1e-13)
        assert np.allclose(g, ev.gradient, atol=1e-12)
    values_only, none = engine.evaluate_samples(inst, theta, deltas, with_gradient=False)
    assert none is None and np.allclose(values_only, values, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), which=st.integers(0, 3))
def test_fidelity_bounds_norm_and_phase(seed, which):
    inst, box = SYSTEMS[which]
    rng = np.random.default_rng(seed)
    theta, d = random_point(inst, box, rng)
    psi = engine.propagate(inst, theta, d)
    assert abs(np.linalg.norm(psi) - 1) < 1e-10
    f = engine.fidelity(inst, theta, d)
    assert -1e-12 <= f <= 1 + 1e-12
    # global phase of the target leaves F unchanged
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    rotated = spinmodel.QaoaInstance(inst.name, inst.h_a, inst.h_b, inst.psi_i, phase * inst.psi_t,
                                     inst.depth, inst.nominal_delta, inst.theta_max, inst.n_sites)
    assert engine.fidelity(rotated, theta, d) == pytest.approx(f, abs=1e-13)


@pytest.mark.parametrize("inst,box", SYSTEMS, ids=IDS)
def test_zero_layer_padding_preserves_fidelity(inst, box):
    rng = np.random.default_rng(3)
    theta, d = random_point(inst, box, rng)
    deeper = inst.with_depth(inst.depth + 2)
    padded = np.concatenate([theta, np.zeros(4)])
    assert engine.fidelity(deeper, padded, d) == pytest.approx(engine.fidelity(inst, theta, d), abs=1e-13)


def test_dimension_mismatch():
    inst = spinmodel.build_chain_two(4)
    with pytest.raises(DimensionMismatch):
        engine.fidelity(inst, np.zeros(9), (0.0,))
    with pytest.raises(DimensionMismatch):
        engine.fidelity(inst, np.zeros(10), (0.0, 1.0))


def test_hessian_examples():
    inst = spinmodel.build_single_qubit(1)
    theta, d = np.array([0.4, 0.9]), (4, -4)
    hess = engine.fidelity_hessian_fd(inst, theta, d)
    assert np.array_equal(hess, hess.T)
    f = lambda th: engine.fidelity(inst, th, d)
    h = 1e-3
    ref = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            ei, ej = np.eye(2)[i] * h, np.eye(2)[j] * h
            ref[i, j] = (f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)) / (4 * h * h)
    assert np.abs(hess - ref).max() < 1e-4
    with pytest.raises(StepTooSmall):
        engine.fidelity_hessian_fd(inst, theta, d, step=1e-10)


def test_hessian_flat_direction():
    # |N̄⟩ is a zero-eigenvalue eigenvector of H_B, so ⟨ψₜ| exp(-iθH_B) = ⟨ψₜ|
    # and the final H_B angle never changes F
    inst = spinmodel.build_chain_two(4)
    theta = np.random.default_rng(4).uniform(0, 2, inst.n_controls)
    hess = engine.fidelity_hessian_fd(inst, theta, (0.05,))
    assert np.abs(hess[-1]).max() < 1e-4 and np.abs(hess[:, -1]).max() < 1e-4


def test_negative_semidefinite_part_examples():
    assert np.allclose(engine.negative_semidefinite_part(np.diag([2.0, -3.0])), np.diag([0.0, -3.0]))
    m = np.random.default_rng(5).normal(size=(4, 4))
    assert np.allclose(engine.negative_semidefinite_part(m @ m.T), 0, atol=1e-12)
    with pytest.raises(NotSymmetric):
        engine.negative_semidefinite_part(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NotSymmetric):
        engine.negative_semidefinite_part(np.zeros((2, 3)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_negative_part_loewner(seed):
    m = np.random.default_rng(seed).normal(size=(6, 6))
    h = m + m.T
    neg = engine.negative_semidefinite_part(h)
    assert np.linalg.eigvalsh(neg).max() <= 1e-10
    assert np.linalg.eigvalsh(h - neg).min() >= -1e-10


def test_fidelity_eval_with_hessian():
    inst = spinmodel.build_chain_two(4)
    theta = np.random.default_rng(6).uniform(0, 2, inst.n_controls)
    ev = engine.fidelity_eval(inst, theta, (0.0,), with_hessian=True)
    assert 0 <= ev.value <= 1 and ev.hess_minus.shape == (10, 10)
    assert np.linalg.eigvalsh(ev.hess_minus).max() <= 1e-9
