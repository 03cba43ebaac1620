import numpy as np
import pytest
from scipy.linalg import expm

from rabigates.errors import NormDriftError, UsageError
from rabigates.evolution import (
    IntegratorSpec,
    NoiseConfig,
    PeriodPropagator,
    StructuredDissipator,
    dissipator_apply,
    evolve_lindblad,
    evolve_lindblad_periodic,
    evolve_pure,
    jump_operators,
)
from rabigates.fock import Operator, QuantumState, Space, coherent, fock, plus_x, product_state, vacuum
from rabigates.hamiltonians import LabHamiltonian, RabiParams, tuning_for_gate

SPEC = IntegratorSpec(rel_tol=1e-10, abs_tol=1e-12)


def _random_dm(n, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_static_hamiltonian_matches_expm():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (m + m.conj().T) / 2
    op = Operator(h, Space.fock(8), hermitian=True)
    psi0 = QuantumState(np.eye(8)[0].astype(complex), Space.fock(8))
    out = evolve_pure(lambda t: op, psi0, 3.0, SPEC)
    assert np.abs(out.data - expm(-3j * h)[:, 0]).max() < 1e-8


def test_frame_diag_option_agrees():
    d = 8
    h0 = np.arange(d, dtype=float)
    m = np.diag(h0) + 0.1 * (np.eye(d, k=1) + np.eye(d, k=-1))
    op = Operator(m, Space.fock(d), hermitian=True)
    psi0 = coherent(d, 0.5)
    a = evolve_pure(lambda t: op, psi0, 5.0, SPEC)
    b = evolve_pure(lambda t: op, psi0, 5.0, SPEC, frame_diag=h0)
    assert np.abs(a.data - b.data).max() < 1e-7


def test_norm_drift_detected():
    op = Operator(-0.1j * np.eye(3), Space.fock(3))
    with pytest.raises(NormDriftError):
        evolve_pure(lambda t: op, vacuum(3), 1.0, SPEC)


def test_dephasing_closed_form():
    gam, t = 0.05, 4.0
    noise = NoiseConfig(rate_sz=gam)
    rho0 = product_state(plus_x(), vacuum(3))
    zero = Operator(np.zeros((6, 6)), Space.composite(3), hermitian=True)
    rho = evolve_lindblad(lambda s: zero, rho0, noise, t, SPEC)
    assert rho.data[0, 3].real == pytest.approx(0.5 * np.exp(-2 * gam * t), rel=1e-8)


def test_loss_and_heating_closed_form():
    d, t = 30, 3.0
    zero = Operator(np.zeros((d, d)), Space.fock(d), hermitian=True)
    rho0 = fock(d, 4)
    loss = evolve_lindblad(lambda s: zero, rho0, NoiseConfig(rate_a=0.1), t, SPEC)
    n = np.real(np.diag(loss.data)) @ np.arange(d)
    assert n == pytest.approx(4 * np.exp(-0.1 * t), rel=1e-7)
    both = evolve_lindblad(lambda s: zero, rho0, NoiseConfig(rate_a=0.02, rate_adag=0.02), t, SPEC)
    n = np.real(np.diag(both.data)) @ np.arange(d)
    assert n == pytest.approx(4 + 0.02 * t, rel=1e-7)


def test_structured_dissipator_matches_dense():
    d = 7
    space = Space.composite(d)
    noise = NoiseConfig(0.3, 0.2, 0.1, 0.05)
    rho = _random_dm(2 * d)
    dense = sum(dissipator_apply(Operator(A, space), r, rho).data for A, r in jump_operators(space, noise))
    assert np.abs(StructuredDissipator(space, noise)(rho) - dense).max() < 1e-12


def test_periodic_lindblad_matches_dense_solver():
    p, d = RabiParams(0.1), 6
    tones = tuning_for_gate("nphot", p, 0.2, n=1)
    ham = LabHamiltonian(p, tones, d)
    noise = NoiseConfig(2e-3, 1e-3, 1e-3, 5e-4)
    rho0 = product_state(plus_x(), vacuum(d))
    slow = evolve_lindblad(ham, rho0, noise, 2 * p.period, SPEC)
    errs = []
    for k in (16, 32):
        prop = PeriodPropagator(ham, IntegratorSpec(rel_tol=1e-11, abs_tol=1e-13, substeps=k))
        errs.append(np.abs(evolve_lindblad_periodic(prop, rho0, noise, 2).data - slow.data).max())
    # Strang splitting is second order in the sub-step
    assert errs[1] < 1e-6 and errs[0] / errs[1] > 3


def test_period_propagator_checks():
    p = RabiParams(0.1)
    prop = PeriodPropagator(LabHamiltonian(p, tuning_for_gate("nphot", p, 0.2, n=1), 5))
    assert np.allclose(prop.step.conj().T @ prop.step, np.eye(10), atol=1e-10)
    assert prop.periods_for(3 * p.period) == 3
    with pytest.raises(UsageError):
        prop.periods_for(1.5 * p.period)


def test_config_validation():
    with pytest.raises(UsageError):
        NoiseConfig(rate_a=-1)
    with pytest.raises(UsageError):
        IntegratorSpec(rel_tol=0.5)
    assert IntegratorSpec(method_order=5).method == "RK45"
    assert IntegratorSpec().halved().rel_tol == pytest.approx(5e-11)
