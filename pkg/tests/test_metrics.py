import math

import numpy as np
import pytest
from scipy.integrate import quad

from rabigates.errors import BracketError, GridError, OutOfRangeError, UsageError
from rabigates.fock import QuantumState, Space, coherent, fock, squeeze, vacuum
from rabigates.gates import multi_squeezed
from rabigates.metrics import (
    WignerGrid,
    cross_section,
    fidelity,
    fock_tail,
    grid_adequacy,
    mana,
    mean_photon,
    optimal_amplitude,
    wigner,
    wigner_parity,
    wigner_points,
)

SMALL = WignerGrid(-6, 6, -6, 6, 121, 121)


def test_vacuum_wigner_closed_form():
    q = np.linspace(-3, 3, 13)
    p = np.linspace(-2, 2, 9)
    w = wigner_points(vacuum(10), q, p)
    ref = np.exp(-q[:, None] ** 2 - p[None, :] ** 2) / np.pi
    assert np.abs(w - ref).max() < 1e-13


@pytest.mark.parametrize("state", [fock(20, 1), multi_squeezed(40, 3, 0.1, leakage_tol=None), coherent(30, 0.8 - 0.4j)])
def test_wigner_matches_parity_oracle(state):
    q = np.array([-1.0, -0.25, 0.5, 1.25])
    w = wigner_points(state, q, [0.7])
    for i, qi in enumerate(q):
        assert w[i, 0] == pytest.approx(wigner_parity(state, qi, 0.7), abs=1e-10)


def test_mana_of_single_photon_radial_oracle():
    # W_1 = (2 r^2 - 1) exp(-r^2) / pi
    f = lambda r: 2 * np.pi * r * abs(2 * r * r - 1) * math.exp(-r * r) / np.pi  # noqa: E731
    r0 = 1 / math.sqrt(2)
    ref = math.log2(quad(f, 0, r0)[0] + quad(f, r0, np.inf)[0])
    assert ref == pytest.approx(0.5121, abs=1e-4)
    assert mana(fock(10, 1)).value == pytest.approx(ref, abs=1e-3)


def test_mana_vanishes_on_gaussian_states():
    for st in (coherent(40, 1 + 1j), QuantumState(squeeze(60, 0.4).data[:, 0], Space.fock(60))):
        assert abs(mana(st, SMALL).value) < 5e-3


def test_wigner_normalisation_and_grid_errors():
    wm = wigner(coherent(30, 0.5), SMALL)
    assert wm.integral() == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(GridError):
        mana(coherent(30, 2.0), WignerGrid(-1, 1, -1, 1, 64, 64))
    with pytest.raises(GridError):
        WignerGrid(n_q=10)
    with pytest.raises(UsageError):
        mana(QuantumState(np.eye(4)[0].astype(complex), Space.composite(2)))


def test_grid_adequacy_small_for_localised_state():
    ext, res = grid_adequacy(fock(10, 1), WignerGrid(-6, 6, -6, 6, 121, 121))
    assert ext < 2e-3 and res < 2e-3


def test_cross_section_shape():
    q = np.linspace(-3, 3, 31)
    c = cross_section(fock(10, 1), 0.0, q)
    assert c.shape == q.shape and c[15] == pytest.approx(-1 / np.pi)


def test_fidelity_and_moments():
    psi = multi_squeezed(30, 3, 0.1, leakage_tol=None)
    assert fidelity(psi, psi) == pytest.approx(1.0)
    with pytest.raises(UsageError):
        fidelity(psi, psi.to_mixed())
    assert mean_photon(fock(8, 3)) == pytest.approx(3)
    assert fock_tail(fock(8, 3), 3) == pytest.approx(1)
    with pytest.raises(OutOfRangeError):
        fock_tail(fock(8, 3), 9)


def test_optimal_amplitude_recovers_gamma():
    st = multi_squeezed(50, 3, 0.12, leakage_tol=None).to_mixed()
    g, f = optimal_amplitude(st, 3, (0.0, 0.3))
    assert g == pytest.approx(0.12, abs=1e-4) and f == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(BracketError):
        optimal_amplitude(st, 3, (0.0, 0.05))
