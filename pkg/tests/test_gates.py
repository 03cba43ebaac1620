import math

import numpy as np
import pytest

from rabigates.acceptance import commutator_identity_error
from rabigates.errors import InvalidOrderError, LambDickeError, LeakageError, TrotterRegimeError, UsageError
from rabigates.experiments import schedule_check
from rabigates.fock import coherent, displacement, squeeze
from rabigates.gates import (
    CubicSpec,
    GateSpec,
    compile_schedule,
    cubic_block_analytic,
    cubic_block_factors,
    cubic_gate,
    energy_to_gamma,
    gate_matrix,
    multi_squeezed,
    schedule_target,
)
from rabigates.hamiltonians import RabiParams, coupling_constant
from rabigates.metrics import mean_photon


@pytest.mark.parametrize("gamma,phase", [(0.3, 0.0), (0.2, 1.1), (0.45, 4.0)])
def test_first_and_second_order_gates(gamma, phase):
    d, k = 60, 30
    g1 = gate_matrix(GateSpec(1, gamma, phase), d, leakage_tol=None).data
    g2 = gate_matrix(GateSpec(2, gamma, phase), d, leakage_tol=None).data
    assert np.abs(g1[:k, :k] - displacement(d, -1j * gamma * np.exp(1j * phase)).data[:k, :k]).max() < 1e-10
    assert np.abs(g2[:k, :k] - squeeze(d, 2j * gamma * np.exp(1j * phase)).data[:k, :k]).max() < 1e-10


def test_branch_conjugate_is_inverse():
    d = 30
    s = GateSpec(3, 0.1, 0.3)
    u = gate_matrix(s, d, leakage_tol=None).data
    v = gate_matrix(s.conjugate(), d, leakage_tol=None).data
    assert np.allclose(u @ v, np.eye(d))


def test_gate_spec_validation():
    with pytest.raises(InvalidOrderError):
        GateSpec(0, 0.1)
    with pytest.raises(UsageError):
        GateSpec(2, 0.1, branch="up")
    with pytest.raises(LeakageError):
        gate_matrix(GateSpec(3, 0.6), 20)


def test_multi_squeezed_first_order_is_coherent():
    d, g = 40, 0.7
    psi = multi_squeezed(d, 1, g)
    assert abs(abs(np.vdot(coherent(d, -1j * g).data, psi.data)) - 1) < 1e-12


def test_energy_to_gamma_inverts_energy():
    d = 80
    g = energy_to_gamma(3, 1.0, d)
    assert mean_photon(multi_squeezed(d, 3, g, leakage_tol=None)) == pytest.approx(1.0, abs=1e-9)


def test_compile_schedule_whole_periods_and_exact_gamma():
    p = RabiParams(0.1)
    prog = [GateSpec(1, 0.3, 0.5), GateSpec(2, 0.1, 0.0, "minus_x")]
    sch = compile_schedule(prog, p, 0.2, conjugation="pulse")
    for seg in sch.segments:
        k = seg.duration / p.period
        assert abs(k - round(k)) < 1e-9
        eps = seg.tones[0].epsilon
        assert coupling_constant(p, eps, seg.gate.n) * seg.duration == pytest.approx(seg.gate.gamma)
        assert seg.duration >= seg.nominal_duration
    assert [pl.index for pl in sch.pulses] == [1, 2]
    assert len(compile_schedule(prog, p, 0.2, conjugation="phase").pulses) == 0


def test_lamb_dicke_guard():
    with pytest.raises(LambDickeError):
        compile_schedule([GateSpec(1, 2.0, np.pi / 2)], RabiParams(0.3), 0.2)


@pytest.mark.parametrize("conjugation", ["phase", "pulse"])
def test_schedule_drive_level_fidelity(conjugation):
    prog = [GateSpec(1, 0.3, 0.5), GateSpec(1, 0.2, 0.0, "minus_x")]
    out = schedule_check(RabiParams(0.05), 0.2, prog, 20, conjugation=conjugation)
    assert out["fidelity"] > 0.99


def test_schedule_target_order():
    p = RabiParams(0.1)
    sch = compile_schedule([GateSpec(1, 0.2), GateSpec(2, 0.1)], p, 0.2)
    u = schedule_target(sch, 30).data
    ref = gate_matrix(GateSpec(2, 0.1), 30, leakage_tol=None).data @ gate_matrix(GateSpec(1, 0.2), 30).data
    assert np.allclose(u, ref)


def test_cubic_spec_parameters():
    spec = CubicSpec.from_periods(RabiParams(0.05), 0.01, (100, 200, 8000), 1200)
    assert spec.delta == pytest.approx(8.27e-5, rel=1e-2)
    assert spec.cubicity == pytest.approx(1 / math.sqrt(32 * math.pi), rel=1e-2)
    with pytest.raises(UsageError):
        CubicSpec(1.0, 2.0, 3.0, 1, 0.1, 0.1, 0.1)
    with pytest.raises(TrotterRegimeError):
        CubicSpec.from_periods(RabiParams(0.05), 1.0, (100, 200, 8000), 1)


def test_commutator_identity():
    assert commutator_identity_error(40) < 1e-12


def test_cubic_block_approximates_cubic_gate():
    spec = CubicSpec.from_periods(RabiParams(0.05), 0.01, (100, 200, 8000), 1)
    d = 60
    b = cubic_block_analytic(spec, d).data[:, 0]
    g = cubic_gate(d, spec.delta).data[:, 0]
    assert abs(np.vdot(g, b)) ** 2 > 1 - 1e-6
    assert len(cubic_block_factors(spec, d, "printed")) == 10
