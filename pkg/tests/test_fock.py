import math

import numpy as np
import pytest
from scipy.linalg import expm

from rabigates.errors import CompositionError, InvalidDimensionError, NumericError, UsageError
from rabigates.fock import (
    Operator,
    QuantumState,
    Space,
    annihilation,
    coherent,
    creation,
    displacement,
    fock,
    leakage,
    matrix_exponential,
    number,
    on_boson,
    on_qubit,
    parity,
    plus_x,
    product_state,
    sigma_x,
    sigma_z,
    squeeze,
    tensor,
    vacuum,
)


def test_ladder_commutator_interior():
    d = 12
    a, ad = annihilation(d).data, creation(d).data
    c = a @ ad - ad @ a
    assert np.allclose(c[:-1, :-1], np.eye(d - 1))
    assert np.allclose(number(d).data, ad @ a)


def test_space_and_dimension_validation():
    with pytest.raises(InvalidDimensionError):
        annihilation(1)
    with pytest.raises(InvalidDimensionError):
        QuantumState(np.ones(3) / math.sqrt(3), Space.fock(4))


def test_operator_flags_and_immutability():
    with pytest.raises(NumericError):
        Operator(np.array([[0, 1], [0, 0]]), Space.fock(2), hermitian=True)
    op = sigma_x()
    with pytest.raises((ValueError, AttributeError)):
        op.data[0, 0] = 1
    with pytest.raises(CompositionError):
        _ = on_boson(number(3)) @ number(3)


def test_tensor_layout_is_qubit_first():
    d = 5
    op = tensor(sigma_z(), number(d))
    assert np.allclose(np.diag(op.data), np.concatenate([np.arange(d), -np.arange(d)]))
    assert np.allclose(on_qubit(sigma_z(), d).data, np.kron(np.diag([1, -1]), np.eye(d)))


def test_state_validation():
    with pytest.raises(NumericError):
        QuantumState(np.array([1.0, 1.0]), Space.fock(2))
    with pytest.raises(NumericError):
        QuantumState.mixed(np.diag([1.2, -0.2]), Space.fock(2))
    with pytest.raises(UsageError):
        QuantumState.mixed(np.eye(2) / 2, Space.fock(2)).vector


def test_ptrace_of_product():
    st = product_state(plus_x(), fock(6, 2))
    red = st.ptrace_qubit()
    assert np.allclose(red.data, np.diag(np.eye(6)[2]))


def test_coherent_matches_displaced_vacuum():
    d, alpha = 60, 1.0 + 0.5j
    psi = displacement(d, alpha).data[:, 0]
    assert abs(abs(np.vdot(coherent(d, alpha).data, psi)) - 1) < 1e-12


def test_squeezed_vacuum_recursion():
    # c_{2m} = (-e^{i theta} tanh r)^m sqrt((2m)!)/(2^m m!) / sqrt(cosh r)
    d, r = 80, 0.4 * np.exp(0.7j)
    psi = squeeze(d, r).data[:, 0]
    t = -np.exp(1j * np.angle(r)) * np.tanh(abs(r))
    c = np.zeros(d, dtype=complex)
    c[0] = 1 / math.sqrt(math.cosh(abs(r)))
    for m in range(1, d // 2):
        c[2 * m] = c[2 * m - 2] * t * math.sqrt((2 * m) * (2 * m - 1)) / (2 * m)
    assert np.abs(psi[:40] - c[:40]).max() < 1e-12


def test_matrix_exponential_paths():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    op = Operator(m, Space.fock(6))
    assert np.allclose(matrix_exponential(op, 0.3).data, expm(0.3 * m))
    h = Operator((m + m.conj().T) / 2, Space.fock(6), hermitian=True)
    assert np.allclose(matrix_exponential(h, -1j).data, expm(-1j * h.data))
    with pytest.raises(NumericError):
        matrix_exponential(Operator(np.full((2, 2), np.nan), Space.fock(2)))


def test_parity_and_leakage():
    d = 10
    assert np.allclose(np.diag(parity(d).data), (-1.0) ** np.arange(d))
    assert leakage(fock(d, 9), 1) == pytest.approx(1.0)
    assert leakage(vacuum(d), 1) == 0.0
