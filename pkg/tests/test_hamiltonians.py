import numpy as np
import pytest

from rabigates.acceptance import transformation_relation_errors
from rabigates.errors import InvalidOrderError, UnknownGateError, UsageError
from rabigates.fock import QuantumState, Space, plus_x, product_state, vacuum
from rabigates.hamiltonians import (
    LabHamiltonian,
    RabiParams,
    coupling_constant,
    frame_lambda,
    h_a,
    h_lab,
    h_nphot,
    h_nphot_s,
    h_rotation,
    project_qubit,
    qubit_displacement_T,
    to_lab,
    to_nphot,
    tuning_for_gate,
)


def test_coupling_constant():
    p = RabiParams(0.1)
    assert coupling_constant(p, 0.2, 3) == pytest.approx(0.1 * 0.2 ** 3 / 6)
    with pytest.raises(InvalidOrderError):
        coupling_constant(p, 0.2, -1)


def test_tuning_rules():
    p = RabiParams(0.1)
    t0, t1 = tuning_for_gate("nphot", p, 0.2, n=3, phase=0.4)
    assert (t0.delta, t1.delta) == (-3.0, 3.0)
    assert t0.phase == pytest.approx(0.4)
    assert t1.phase == pytest.approx((-0.4 + np.pi) % (2 * np.pi))
    s0, s1 = tuning_for_gate("nphot_s", p, 0.2, n=2)
    assert s0.phase == pytest.approx(np.pi) and s1.phase == 0.0
    r0, r1 = tuning_for_gate("rotation", p, 0.2)
    assert r0.delta == 0 and r1.epsilon == 0
    with pytest.raises(UnknownGateError):
        tuning_for_gate("teleport", p, 0.2, n=1)


def test_effective_hamiltonians_hermitian():
    p = RabiParams(0.1)
    for h in (h_nphot(p, 3, 0.3, 0.2, 12), h_nphot_s(p, 2, 0.2, 12), h_rotation(p, 0.2, 12)):
        assert np.allclose(h.data, h.data.conj().T)
    with pytest.raises(InvalidOrderError):
        h_nphot(p, 5, 0.0, 0.2, 4)


def test_lab_hamiltonian_terms():
    p = RabiParams(0.1)
    tones = tuning_for_gate("nphot", p, 0.2, n=1)
    h = h_lab(p, tones, 0.0, 6).data
    assert np.allclose(h, h.conj().T)
    ham = LabHamiltonian(p, tones, 6)
    assert ham.period == pytest.approx(2 * np.pi)
    assert LabHamiltonian(p, [tones[0].__class__(0.5, 0.1)], 6).period is None


def test_displaced_frame_matches_lab():
    # T^dag (H_lab) T = h_a + const for the static part at t = 0
    p, d = RabiParams(0.1), 40
    tones = tuning_for_gate("nphot", p, 0.2, n=2)
    t = qubit_displacement_T(d, -p.g).data
    lhs = t.conj().T @ h_lab(p, tones, 0.3, d).data @ t
    rhs = h_a(p, tones, 0.3, d).data - p.g ** 2 * np.eye(2 * d)
    k = d - 12
    idx = np.concatenate([np.arange(k), d + np.arange(k)])
    assert np.abs((lhs - rhs)[np.ix_(idx, idx)]).max() < 1e-8


@pytest.mark.parametrize("alpha", [-0.1, 0.05 + 0.2j])
def test_transformation_relations(alpha):
    assert transformation_relation_errors(40, alpha) < 1e-10


def test_frame_round_trip():
    p = RabiParams(0.1)
    rng = np.random.default_rng(1)
    psi = QuantumState.pure(rng.normal(size=20) + 1j * rng.normal(size=20), Space.composite(10), normalize=True)
    back = to_nphot(to_lab(psi, 2.1, p), 2.1, p)
    assert np.abs(back.data - psi.data).max() < 1e-12
    lam = frame_lambda(p, 0.0, 10).data
    assert np.allclose(lam.conj().T @ lam, np.eye(20))


def test_projection_probabilities_sum_to_one():
    p = RabiParams(0.1)
    st = to_lab(product_state(plus_x(), vacuum(15)), 0.0, p)
    _, pp = project_qubit(st, "plus_x")
    _, pm = project_qubit(st, "minus_x")
    assert pp + pm == pytest.approx(1.0)
    with pytest.raises(UsageError):
        project_qubit(st, "sideways")


def test_invalid_params():
    with pytest.raises(UsageError):
        RabiParams(0.1, omega=-1)
    with pytest.raises(UsageError):
        LabHamiltonian(RabiParams(0.1), [], 4, frame="moving")
