"""Wigner function, mana, fidelity and related state metrics.

The Wigner function is computed from the position representation,

    W(q, p) = (1/pi) int dy <q + y| rho |q - y> exp(-2 i p y),

with the Fock states expanded in Hermite functions on a uniform lattice. The
lattice spacing divides the q spacing of the grid so that q +/- y stays on the
lattice, and it is fine enough that the trapezoid sum over y is converged to
machine precision for every band-limited state in the truncation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from .errors import BracketError, GridError, OutOfRangeError, UsageError
from .fock import QuantumState, displacement, parity
from .gates import multi_squeezed

NORM_TOL = 5e-3
ADEQUACY_TOL = 2e-3
MANA_FLOOR = -5e-3


@dataclass(frozen=True)
class WignerGrid:
    q_min: float = -8.0
    q_max: float = 8.0
    p_min: float = -8.0
    p_max: float = 8.0
    n_q: int = 321
    n_p: int = 321

    def __post_init__(self):
        if not (self.q_max > self.q_min and self.p_max > self.p_min):
            raise GridError("grid bounds must be increasing")
        if self.n_q < 64 or self.n_p < 64:
            raise GridError("grids need at least 64 points per axis")

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / (self.n_q - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    def doubled_extent(self) -> "WignerGrid":
        qc, pc = (self.q_min + self.q_max) / 2, (self.p_min + self.p_max) / 2
        qh, ph = self.q_max - qc, self.p_max - pc
        return WignerGrid(qc - 2 * qh, qc + 2 * qh, pc - 2 * ph, pc + 2 * ph,
                          2 * self.n_q - 1, 2 * self.n_p - 1)

    def doubled_resolution(self) -> "WignerGrid":
        return WignerGrid(self.q_min, self.q_max, self.p_min, self.p_max, 2 * self.n_q - 1, 2 * self.n_p - 1)


@dataclass(frozen=True)
class WignerMap:
    grid: WignerGrid
    values: np.ndarray  # shape (n_q, n_p)

    def integral(self) -> float:
        return float(trapezoid(trapezoid(self.values, dx=self.grid.dp, axis=1), dx=self.grid.dq))

    def abs_integral(self) -> float:
        return float(trapezoid(trapezoid(np.abs(self.values), dx=self.grid.dp, axis=1), dx=self.grid.dq))


def _bosonic_dm(state: QuantumState) -> np.ndarray:
    if state.space.qubit:
        raise UsageError("reduce or project the qubit before computing phase-space quantities")
    return state.dm()


def hermite_functions(dim: int, x: np.ndarray) -> np.ndarray:
    """Normalised oscillator eigenfunctions phi_m(x), m < dim, by the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    phi = np.empty((dim, x.size))
    phi[0] = np.pi ** -0.25 * np.exp(-x ** 2 / 2)
    if dim > 1:
        phi[1] = np.sqrt(2.0) * x * phi[0]
    for m in range(1, dim - 1):
        phi[m + 1] = np.sqrt(2.0 / (m + 1)) * x * phi[m] - np.sqrt(m / (m + 1)) * phi[m - 1]
    return phi


def _effective_dim(rho: np.ndarray) -> int:
    pops = np.abs(np.real(np.diag(rho)))
    tail = np.cumsum(pops[::-1])[::-1]
    keep = np.nonzero(tail > 1e-24)[0]
    return max(2, int(keep[-1]) + 1 if keep.size else 2)


def _wigner_values(rho: np.ndarray, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    d = _effective_dim(rho)
    rho = rho[:d, :d]
    dq = q[1] - q[0] if q.size > 1 else 0.1
    h_max = 0.5 * np.pi / (2 * np.sqrt(2 * d + 1) + 2 * np.max(np.abs(p)))
    sub = max(1, int(np.ceil(dq / h_max)))
    h = dq / sub
    reach = np.sqrt(2 * d + 1) + 8.0
    ny = int(np.ceil((reach + np.max(np.abs(q))) / h))
    k = np.arange(-ny, (q.size - 1) * sub + ny + 1)
    x = q[0] + k * h
    phi = hermite_functions(d, x)
    j = np.arange(-ny, ny + 1)
    kernel = np.exp(-2j * np.outer(j * h, p))
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    keep = np.abs(w) > 1e-15
    f = phi.T @ v[:, keep]          # columns are eigenvector wavefunctions
    wts = w[keep]
    out = np.empty((q.size, p.size))
    for i in range(q.size):
        c = i * sub + ny
        corr = np.einsum("jk,k,jk->j", f[c + j], wts, f[c - j].conj())
        out[i] = (corr @ kernel).real * h / np.pi
    return out


def wigner(state: QuantumState, grid: WignerGrid = WignerGrid()) -> WignerMap:
    return WignerMap(grid, _wigner_values(_bosonic_dm(state), grid.q, grid.p))


def wigner_points(state: QuantumState, q, p) -> np.ndarray:
    """W on the outer product of arbitrary uniformly spaced q and p samples."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return _wigner_values(_bosonic_dm(state), q, p)


def cross_section(state: QuantumState, p: float, q) -> np.ndarray:
    """W(q, p) along a line of constant p."""
    return wigner_points(state, q, [p])[:, 0]


def wigner_parity(state: QuantumState, q: float, p: float, *, pad: int = 40) -> float:
    """Reference value (1/pi) Tr[rho D(beta) Pi D^dag(beta)] in an enlarged space."""
    rho = _bosonic_dm(state)
    d = rho.shape[0]
    beta = (q + 1j * p) / np.sqrt(2)
    big = d + pad + int(np.ceil(4 * abs(beta) ** 2))
    r = np.zeros((big, big), dtype=complex)
    r[:d, :d] = rho
    dm = displacement(big, beta).data
    op = dm @ parity(big).data @ dm.conj().T
    return float(np.real(np.trace(r @ op)) / np.pi)


@dataclass(frozen=True)
class ManaResult:
    value: float
    normalization: float
    extent_delta: float | None = None
    resolution_delta: float | None = None

    @property
    def adequate(self) -> bool | None:
        if self.extent_delta is None or self.resolution_delta is None:
            return None
        return self.extent_delta <= ADEQUACY_TOL and self.resolution_delta <= ADEQUACY_TOL

    def __float__(self):
        return self.value


def _mana_on(state: QuantumState, grid: WignerGrid) -> tuple[float, float]:
    wm = wigner(state, grid)
    return float(np.log2(wm.abs_integral())), wm.integral()


def mana(state: QuantumState, grid: WignerGrid = WignerGrid(), *, adequacy: bool = False,
         strict: bool = True) -> ManaResult:
    """log2 of the trapezoid integral of |W|.

    Raises GridError when the Wigner function does not integrate to 1 within
    5e-3 on the grid, unless ``strict`` is off (the normalisation is still
    reported). With ``adequacy`` the grid-doubling deltas are attached.
    """
    value, norm = _mana_on(state, grid)
    if strict and abs(norm - 1) > NORM_TOL:
        raise GridError(f"Wigner function integrates to {norm:.5f} on the grid")
    if value < MANA_FLOOR:
        raise GridError(f"mana {value:.2e} below the numerical floor")
    if not adequacy:
        return ManaResult(value, norm)
    ext, res = grid_adequacy(state, grid, base=value)
    return ManaResult(value, norm, ext, res)


def grid_adequacy(state: QuantumState, grid: WignerGrid = WignerGrid(), *, base: float | None = None):
    """Changes of mana when the grid extent and resolution are doubled."""
    if base is None:
        base = _mana_on(state, grid)[0]
    ext = abs(_mana_on(state, grid.doubled_extent())[0] - base)
    res = abs(_mana_on(state, grid.doubled_resolution())[0] - base)
    return ext, res


def fidelity(rho: QuantumState, target: QuantumState) -> float:
    """<target| rho |target> for a pure target."""
    if not target.is_pure:
        raise UsageError("fidelity is defined against a pure target")
    if rho.space != target.space:
        raise UsageError(f"state on {rho.space}, target on {target.space}")
    t = target.data
    if rho.is_pure:
        return float(abs(np.vdot(t, rho.data)) ** 2)
    return float(np.real(np.vdot(t, rho.data @ t)))


def mean_photon(state: QuantumState) -> float:
    pops = state.populations()
    return float(np.sum(np.arange(pops.size) * pops))


def fock_tail(state: QuantumState, m0: int) -> float:
    pops = state.populations()
    if not 0 <= m0 < pops.size:
        raise OutOfRangeError(f"m0={m0} outside [0, {pops.size})")
    return float(pops[m0:].sum())


def optimal_amplitude(rho: QuantumState, n: int, bracket: tuple[float, float] = (0.0, 0.3), *,
                      scan_points: int = 64, xtol: float = 1e-4) -> tuple[float, float]:
    """Amplitude gamma maximising <gamma_n| rho |gamma_n>.

    A coarse scan locates the maximum, which must be interior to the bracket
    (an edge at gamma = 0 is accepted); golden-section search refines it.
    """
    lo, hi = bracket
    if not hi > lo:
        raise BracketError("empty bracket")
    d = rho.space.boson
    if rho.space.qubit or d is None:
        raise UsageError("optimal_amplitude needs a bosonic state")

    def fid(g):
        return fidelity(rho, multi_squeezed(d, n, g, leakage_tol=None))

    grid = np.linspace(lo, hi, scan_points)
    vals = np.array([fid(g) for g in grid])
    k = int(np.argmax(vals))
    if k == scan_points - 1 or (k == 0 and lo != 0):
        raise BracketError(f"fidelity maximum at the bracket edge gamma={grid[k]:.4g}")
    if k == 0:
        g_lo, g_hi = 0.0, grid[1]
        res = minimize_scalar(lambda g: -fid(g), bounds=(g_lo, g_hi), method="bounded",
                              options={"xatol": xtol / 10})
        if -res.fun < vals[0]:
            return 0.0, float(vals[0])
        return float(res.x), float(-res.fun)
    res = minimize_scalar(lambda g: -fid(g), bracket=(grid[k - 1], grid[k], grid[k + 1]),
                          method="golden", tol=xtol / 10 / max(abs(grid[k]), 1e-3))
    return float(res.x), float(-res.fun)
