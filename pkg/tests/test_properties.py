import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rabigates.evolution import NoiseConfig, StructuredDissipator
from rabigates.fock import QuantumState, Space, coherent, displacement
from rabigates.gates import GateSpec, gate_matrix
from rabigates.hamiltonians import RabiParams, to_lab, to_nphot
from rabigates.metrics import WignerGrid, wigner

FAST = settings(max_examples=20, deadline=None)
small = st.floats(-1.0, 1.0, allow_nan=False)
rate = st.floats(0.0, 0.5, allow_nan=False)


@FAST
@given(small, small)
def test_displacement_inverse(x, y):
    d, a = 40, complex(x, y)
    u = displacement(d, a).data @ displacement(d, -a).data
    assert np.abs(u[:20, :20] - np.eye(20)).max() < 1e-10


@FAST
@given(st.integers(1, 4), st.floats(0.0, 0.3), st.floats(0.0, 6.3))
def test_gates_unitary(n, gamma, phase):
    u = gate_matrix(GateSpec(n, gamma, phase), 30, leakage_tol=None).data
    assert np.abs(u.conj().T @ u - np.eye(30)).max() < 1e-10


@FAST
@given(st.floats(-0.3, 0.3), st.floats(0.0, 50.0), st.integers(0, 2 ** 31))
def test_frame_round_trip(g, t, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi = QuantumState.pure(v, Space.composite(8), normalize=True)
    p = RabiParams(g)
    assert np.abs(to_nphot(to_lab(psi, t, p), t, p).data - psi.data).max() < 1e-10


@FAST
@given(small, small)
def test_wigner_normalised(x, y):
    wm = wigner(coherent(30, complex(x, y)), WignerGrid(-7, 7, -7, 7, 101, 101))
    assert abs(wm.integral() - 1) < 1e-6


@FAST
@given(rate, rate, rate, rate, st.integers(0, 2 ** 31))
def test_dissipator_traceless_and_hermitian(ra, rad, rz, rm, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    out = StructuredDissipator(Space.composite(5), NoiseConfig(ra, rad, rz, rm))(rho)
    assert abs(np.trace(out)) < 1e-12
    assert np.abs(out - out.conj().T).max() < 1e-12
