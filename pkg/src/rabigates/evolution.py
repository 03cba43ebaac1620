"""Schrodinger and Lindblad integrators.

Two families live here. The generic integrators (``evolve_pure``,
``evolve_lindblad``) hand the vectorised state to an embedded Runge-Kutta
method from scipy. The periodic integrators exploit that every drive tone of
an n-photon schedule is commensurate with the oscillator: one period of
evolution is computed once as a set of sub-step propagators and then
re-applied, with dissipation interleaved by Strang splitting.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    CompositionError,
    IntegratorAccuracyError,
    NormDriftError,
    StepUnderflowError,
    TraceDriftError,
    UsageError,
)
from .fock import Operator, QuantumState, Space, annihilation
from .hamiltonians import LabHamiltonian

log = logging.getLogger(__name__)

NORM_RENORMALIZE_TOL = 1e-6
TRACE_TOL = 1e-6
NEG_EIG_TOL = 1e-5


@dataclass(frozen=True)
class NoiseConfig:
    """Lindblad rates (units of omega) for the jump operators a, a^dag, sz, s-."""

    rate_a: float = 0.0
    rate_adag: float = 0.0
    rate_sz: float = 0.0
    rate_sminus: float = 0.0

    def __post_init__(self):
        for name in ("rate_a", "rate_adag", "rate_sz", "rate_sminus"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise UsageError(f"{name} must be a non-negative rate, got {v}")

    @classmethod
    def standard(cls) -> "NoiseConfig":
        """Rates used in the noisy benchmark runs."""
        return cls(rate_a=3.5e-5, rate_adag=3.5e-5, rate_sz=5e-6, rate_sminus=2.5e-6)

    @property
    def is_zero(self) -> bool:
        return not any((self.rate_a, self.rate_adag, self.rate_sz, self.rate_sminus))


@dataclass(frozen=True)
class IntegratorSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    method_order: int = 8
    substeps: int = 16

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-2:
                raise UsageError(f"{name} must lie in (0, 1e-2], got {v}")
        if self.method_order < 4:
            raise UsageError("method_order must be >= 4")
        if not self.max_step > 0:
            raise UsageError("max_step must be positive")
        if self.substeps < 1:
            raise UsageError("substeps must be >= 1")

    @property
    def method(self) -> str:
        return "DOP853" if self.method_order >= 8 else "RK45"

    @classmethod
    def for_hamiltonian(cls, ham: LabHamiltonian, **kw) -> "IntegratorSpec":
        """Cap the step at 1/40 of the fastest drive period."""
        return cls(max_step=2 * np.pi / (40 * ham.max_frequency), **kw)

    def halved(self) -> "IntegratorSpec":
        return IntegratorSpec(self.rel_tol / 2, self.abs_tol / 2, self.max_step, self.method_order, self.substeps)


def _as_matrix(h) -> np.ndarray:
    return h.data if isinstance(h, Operator) else np.asarray(h)


def _solve(rhs, y0, t0, t1, spec: IntegratorSpec):
    sol = solve_ivp(rhs, (t0, t1), y0, method=spec.method, rtol=spec.rel_tol,
                    atol=spec.abs_tol, max_step=spec.max_step, t_eval=[t1])
    if sol.status != 0:
        if "step size" in sol.message.lower():
            raise StepUnderflowError(sol.message)
        raise IntegratorAccuracyError(sol.message)
    return sol.y[:, -1], sol.nfev


def evolve_pure(H: Callable[[float], object], psi0: QuantumState, t_final: float,
                spec: IntegratorSpec = IntegratorSpec(), *, t0: float = 0.0,
                frame_diag: np.ndarray | None = None) -> QuantumState:
    """Integrate i dpsi/dt = H(t) psi from t0 to t_final.

    ``frame_diag`` optionally names a real diagonal H0 whose fast rotation is
    removed analytically; the state is returned in the original frame.
    """
    if not psi0.is_pure:
        raise UsageError("evolve_pure needs a pure state")
    if t_final == t0:
        return psi0
    if frame_diag is None:
        def rhs(t, y):
            return -1j * (_as_matrix(H(t)) @ y)
        y0 = psi0.data
    else:
        h0 = np.asarray(frame_diag, dtype=float)

        def rhs(t, y):
            ph = np.exp(1j * h0 * t)
            m = _as_matrix(H(t)) - np.diag(h0)
            return -1j * ph * (m @ (ph.conj() * y))
        y0 = np.exp(1j * h0 * t0) * psi0.data
    y, _ = _solve(rhs, np.array(y0, dtype=complex), t0, t_final, spec)
    if frame_diag is not None:
        y = np.exp(-1j * h0 * t_final) * y
    drift = abs(np.linalg.norm(y) - 1.0)
    if drift > NORM_RENORMALIZE_TOL:
        raise NormDriftError(f"norm drifted by {drift:.2e}")
    log.debug("evolve_pure norm drift %.2e", drift)
    return QuantumState(y / np.linalg.norm(y), psi0.space)


# --- dissipation -----------------------------------------------------------

def jump_operators(space: Space, noise: NoiseConfig) -> list[tuple[np.ndarray, float]]:
    """Dense (A, rate) pairs with non-zero rate for the given space."""
    out = []
    if space.boson is not None:
        a = annihilation(space.boson).data
        lift = (lambda m: np.kron(np.eye(2), m)) if space.qubit else (lambda m: m)
        out += [(lift(a), noise.rate_a), (lift(a.conj().T), noise.rate_adag)]
    elif noise.rate_a or noise.rate_adag:
        raise CompositionError("bosonic rates given for a qubit-only state")
    if space.qubit:
        ib = np.eye(space.boson or 1)
        out += [(np.kron(np.diag([1.0, -1.0]), ib), noise.rate_sz),
                (np.kron(np.array([[0, 0], [1, 0]]), ib), noise.rate_sminus)]
    elif noise.rate_sz or noise.rate_sminus:
        raise CompositionError("qubit rates given for a boson-only state")
    return [(np.asarray(A, dtype=complex), r) for A, r in out if r > 0]


def dissipator_apply(A: Operator, gamma: float, rho) -> Operator:
    """gamma (A rho A^dag - {A^dag A, rho}/2)."""
    r = rho.dm() if isinstance(rho, QuantumState) else np.asarray(rho)
    a = A.data
    if r.shape != a.shape:
        raise CompositionError(f"operator {a.shape} and state {r.shape} do not match")
    ada = a.conj().T @ a
    out = gamma * (a @ r @ a.conj().T - 0.5 * (ada @ r + r @ ada))
    return Operator(out, A.space)


def _lindblad_rhs(H, jumps):
    pre = [(A, A.conj().T, A.conj().T @ A, r) for A, r in jumps]

    def rhs(t, y):
        n = int(round(np.sqrt(y.size)))
        rho = y.reshape(n, n)
        h = _as_matrix(H(t))
        out = -1j * (h @ rho - rho @ h)
        for A, Ad, AdA, r in pre:
            out += r * (A @ rho @ Ad - 0.5 * (AdA @ rho + rho @ AdA))
        return out.ravel()
    return rhs


def _finish_mixed(rho: np.ndarray, space: Space) -> QuantumState:
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceDriftError(f"trace drifted to {tr:.10f}")
    rho = (rho + rho.conj().T) / 2
    low = np.linalg.eigvalsh(rho).min()
    if low < -NEG_EIG_TOL:
        raise IntegratorAccuracyError(f"density matrix eigenvalue {low:.2e}")
    return QuantumState(rho / tr, space, check=False)


def evolve_lindblad(H: Callable[[float], object], rho0: QuantumState, noise: NoiseConfig,
                    t_final: float, spec: IntegratorSpec = IntegratorSpec(), *,
                    t0: float = 0.0) -> QuantumState:
    """Integrate the Lindblad master equation on the full density matrix."""
    rho0 = rho0.to_mixed()
    if t_final == t0:
        return rho0
    rhs = _lindblad_rhs(H, jump_operators(rho0.space, noise))
    y, _ = _solve(rhs, np.array(rho0.data, dtype=complex).ravel(), t0, t_final, spec)
    n = rho0.space.dim
    return _finish_mixed(y.reshape(n, n), rho0.space)


class StructuredDissipator:
    """Fast Lindblad dissipator for the four standard jump operators.

    Works on the (qubit x boson) block structure directly: a rho a^dag is an
    index shift with sqrt weights, sz rho sz flips the sign of the qubit
    coherences and s- rho s+ moves the |0><0| block to |1><1|.
    """

    def __init__(self, space: Space, noise: NoiseConfig):
        if space.boson is None:
            raise UsageError("structured dissipator needs a bosonic factor")
        if not space.qubit and (noise.rate_sz or noise.rate_sminus):
            raise CompositionError("qubit rates given for a boson-only state")
        self.space = space
        self.noise = noise
        d = space.boson
        m = np.arange(d, dtype=float)
        self._sq = np.sqrt(m[1:])           # sqrt(m+1) for m < d-1
        self._n_a = m                       # a^dag a
        self._n_ad = np.append(m[1:], 0.0)  # a a^dag, truncated
        self._q = 2 if space.qubit else 1

    def _blocks(self, rho):
        d = self.space.boson
        return rho.reshape(self._q, d, self._q, d)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        nz = self.noise
        r = self._blocks(rho)
        out = np.zeros_like(r)
        sq = self._sq
        w = sq[:, None] * sq[None, :]
        if nz.rate_a:
            out[:, :-1, :, :-1] += nz.rate_a * w[None, :, None, :] * r[:, 1:, :, 1:]
            k = self._n_a
            out -= 0.5 * nz.rate_a * (k[None, :, None, None] + k[None, None, None, :]) * r
        if nz.rate_adag:
            out[:, 1:, :, 1:] += nz.rate_adag * w[None, :, None, :] * r[:, :-1, :, :-1]
            k = self._n_ad
            out -= 0.5 * nz.rate_adag * (k[None, :, None, None] + k[None, None, None, :]) * r
        if self._q == 2:
            if nz.rate_sz:
                out[0, :, 1, :] -= 2 * nz.rate_sz * r[0, :, 1, :]
                out[1, :, 0, :] -= 2 * nz.rate_sz * r[1, :, 0, :]
            if nz.rate_sminus:
                g = nz.rate_sminus
                out[1, :, 1, :] += g * r[0, :, 0, :]
                out[0, :, 0, :] -= g * r[0, :, 0, :]
                out[0, :, 1, :] -= 0.5 * g * r[0, :, 1, :]
                out[1, :, 0, :] -= 0.5 * g * r[1, :, 0, :]
        return out.reshape(rho.shape)

    def exp_apply(self, rho: np.ndarray, h: float, order: int = 4) -> np.ndarray:
        """Taylor approximation of exp(h L_D) rho; each term is traceless."""
        out = rho.copy()
        term = rho
        for k in range(1, order + 1):
            term = self(term) * (h / k)
            out += term
        return out


# --- periodic fast path ----------------------------------------------------

class PeriodPropagator:
    """Sub-step propagators over one oscillator period in the rotating frame.

    At integer multiples of the period U0 = I, so the rotating-frame and
    lab-frame states coincide there. The jump operators a and a^dag only pick
    up phases under U0 that cancel inside their dissipators, so dissipation
    can be applied in the rotating frame unchanged.
    """

    def __init__(self, ham: LabHamiltonian, spec: IntegratorSpec = IntegratorSpec(rel_tol=1e-12, abs_tol=1e-13)):
        period = ham.period
        if period is None:
            raise UsageError("drive detunings are not commensurate with omega")
        self.ham = LabHamiltonian(ham.params, ham.tones, ham.dim, frame="rotating")
        self.period = period
        self.spec = spec
        self.space = ham.space
        n = ham.space.dim
        edges = np.linspace(0.0, period, spec.substeps + 1)
        self.substeps = []
        eye = np.eye(n, dtype=complex).ravel()
        H = self.ham

        def rhs(t, y):
            return (-1j * (H(t) @ y.reshape(n, n))).ravel()
        for t0, t1 in zip(edges[:-1], edges[1:]):
            y, _ = _solve(rhs, eye, t0, t1, spec)
            self.substeps.append(y.reshape(n, n))
        self.step = np.linalg.multi_dot(self.substeps[::-1]) if len(self.substeps) > 1 else self.substeps[0]
        err = np.abs(self.step.conj().T @ self.step - np.eye(n)).max()
        if err > 1e-8:
            raise IntegratorAccuracyError(f"period propagator not unitary ({err:.2e})")

    @property
    def dt(self) -> float:
        return self.period / len(self.substeps)

    def periods_for(self, duration: float) -> int:
        p = duration / self.period
        k = int(round(p))
        if abs(p - k) > 1e-9 * max(1.0, p):
            raise UsageError(f"duration {duration} is not a whole number of periods")
        return k


def evolve_pure_periodic(prop: PeriodPropagator, psi0: QuantumState, periods: int) -> QuantumState:
    if not psi0.is_pure:
        raise UsageError("evolve_pure_periodic needs a pure state")
    psi = np.array(psi0.data)
    for _ in range(periods):
        psi = prop.step @ psi
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift > NORM_RENORMALIZE_TOL:
        raise NormDriftError(f"norm drifted by {drift:.2e}")
    return QuantumState(psi / np.linalg.norm(psi), psi0.space)


def evolve_lindblad_periodic(prop: PeriodPropagator, rho0: QuantumState, noise: NoiseConfig,
                             periods: int, *, callback: Callable[[int, np.ndarray], None] | None = None) -> QuantumState:
    """Strang-split Lindblad evolution: half dissipation, unitary sub-step, half dissipation."""
    rho = np.array(rho0.to_mixed().data, dtype=complex)
    if noise.is_zero:
        for p in range(periods):
            rho = prop.step @ rho @ prop.step.conj().T
            if callback:
                callback(p + 1, rho)
        return _finish_mixed(rho, rho0.space)
    diss = StructuredDissipator(rho0.space, noise)
    h = prop.dt / 2
    for p in range(periods):
        for u in prop.substeps:
            rho = diss.exp_apply(rho, h)
            rho = u @ rho @ u.conj().T
            rho = diss.exp_apply(rho, h)
        if callback:
            callback(p + 1, rho)
    return _finish_mixed(rho, rho0.space)

