"""Driven Rabi Hamiltonians, frame maps and drive-tuning rules.

Units: everything is measured in units of the oscillator frequency, so a
``RabiParams`` with ``omega=1`` is the canonical choice. Times are in 1/omega.

Frames:
    lab       H_lab(t) = w a^dag a + g sx (a + a^dag) + sum_j (e_j/2)[cos(th_j) sz + sin(th_j) sy]
    a         T^dag(-g/w) H_lab T(-g/w), written with the displacement E = D(-2g/w)
    b         interaction picture of frame a with respect to w a^dag a
    n-phot    coarse-grained frame b, H = g_n sx (a^n e^{-i phi} + h.c.)

``Lambda(t) = T(-g/w) U0(t)`` takes n-photon-frame states to the lab frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateProjectionError,
    InvalidDimensionError,
    InvalidOrderError,
    UnknownGateError,
    UsageError,
)
from .fock import (
    Operator,
    QuantumState,
    Space,
    annihilation,
    displacement,
    minus_x,
    plus_x,
    qubit0,
    qubit1,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RabiParams:
    g: float
    omega: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise UsageError(f"omega must be positive, got {self.omega}")
        if not np.isfinite(self.g) or np.iscomplexobj(self.g):
            raise UsageError(f"g must be a finite real number, got {self.g}")

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    @property
    def lamb_dicke(self) -> float:
        """Displacement ratio 2g/omega."""
        return 2.0 * self.g / self.omega


@dataclass(frozen=True)
class DriveTone:
    delta: float
    epsilon: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise UsageError(f"drive amplitude must be >= 0, got {self.epsilon}")
        object.__setattr__(self, "phase", float(np.mod(self.phase, TWO_PI)))


def coupling_constant(params: RabiParams, epsilon: float, n: int) -> float:
    """g_n = (eps/2) (2g/w)^n / n!."""
    if n < 0:
        raise InvalidOrderError(f"photon order must be >= 0, got {n}")
    return 0.5 * epsilon * (2.0 * params.g / params.omega) ** n / math.factorial(n)


@dataclass(frozen=True)
class EffectiveCoupling:
    n: int
    g_n: float

    def __post_init__(self):
        if self.n < 1:
            raise InvalidOrderError(f"photon order must be >= 1, got {self.n}")

    @classmethod
    def from_drive(cls, params: RabiParams, epsilon: float, n: int) -> "EffectiveCoupling":
        return cls(n, coupling_constant(params, epsilon, n))

    def duration(self, gamma: float) -> float:
        """Evolution time t_f = gamma / g_n."""
        return gamma / self.g_n


# --- cached building blocks ------------------------------------------------

def _ro(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=16)
def composite_ops(dim: int) -> dict:
    """Read-only composite matrices used in the hot loops."""
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    a = annihilation(dim).data
    i_b = np.eye(dim)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0]).astype(complex)
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    return {
        "a": _ro(np.kron(np.eye(2), a)),
        "sx_a": _ro(np.kron(sx, a)),
        "sx": _ro(np.kron(sx, i_b)),
        "sy": _ro(np.kron(sy, i_b)),
        "sz": _ro(np.kron(sz, i_b)),
        "sp": _ro(np.kron(sp, i_b)),
        "num": _ro(np.arange(2 * dim) % dim * 1.0),
    }


@lru_cache(maxsize=32)
def _displacement_cached(dim: int, alpha: complex) -> np.ndarray:
    return _ro(np.array(displacement(dim, alpha).data))


def _boson_phase(dim: int, omega_t: float) -> np.ndarray:
    """Diagonal of U0 = exp(-i w t a^dag a) on the boson factor."""
    return np.exp(-1j * omega_t * np.arange(dim))


def _theta(tone: DriveTone, t: float) -> float:
    return tone.delta * t + tone.phase


# --- lab frame -------------------------------------------------------------

class LabHamiltonian:
    """Callable H(t) for the two-tone driven Rabi model.

    ``frame='rotating'`` gives U0^dag H U0 - w a^dag a with U0 = exp(-i w t a^dag a),
    i.e. the coupling rotates as a e^{-i w t}; the drive terms are unchanged.
    Calling the object returns a raw ndarray; ``operator(t)`` wraps it.
    """

    def __init__(self, params: RabiParams, tones: Sequence[DriveTone], dim: int, frame: str = "lab"):
        if frame not in ("lab", "rotating"):
            raise UsageError(f"unknown frame {frame!r}")
        self.params = params
        self.tones = tuple(tones)
        self.dim = dim
        self.frame = frame
        self.space = Space.composite(dim)
        ops = composite_ops(dim)
        self._sx_a = ops["sx_a"]
        self._sy = ops["sy"]
        self._sz = ops["sz"]
        self._num = np.diag(ops["num"] * params.omega)

    @property
    def period(self) -> float | None:
        """Common period 2pi/w when every detuning is an integer multiple of w."""
        for tone in self.tones:
            ratio = tone.delta / self.params.omega
            if abs(ratio - round(ratio)) > 1e-12:
                return None
        return self.params.period

    @property
    def max_frequency(self) -> float:
        return max([abs(t.delta) for t in self.tones] + [self.params.omega])

    def drive(self, t: float) -> np.ndarray:
        out = np.zeros_like(self._sz)
        for tone in self.tones:
            if tone.epsilon == 0:
                continue
            th = _theta(tone, t)
            out += 0.5 * tone.epsilon * (np.cos(th) * self._sz + np.sin(th) * self._sy)
        return out

    def __call__(self, t: float) -> np.ndarray:
        g, w = self.params.g, self.params.omega
        if self.frame == "lab":
            c = g * (self._sx_a + self._sx_a.conj().T) + self._num
        else:
            ph = np.exp(-1j * w * t)
            c = g * (self._sx_a * ph + self._sx_a.conj().T * np.conj(ph))
        return c + self.drive(t)

    def operator(self, t: float) -> Operator:
        return Operator(self(t), self.space, hermitian=True)


def h_lab(params: RabiParams, tones: Sequence[DriveTone], t: float, dim: int) -> Operator:
    return LabHamiltonian(params, tones, dim).operator(t)


def qubit_displacement_T(dim: int, alpha: complex) -> Operator:
    """T(alpha) = [[D^dag, D], [-D^dag, D]] / sqrt(2) with rows indexed by the qubit."""
    d = _displacement_cached(dim, complex(alpha))
    dd = d.conj().T
    t = np.block([[dd, d], [-dd, d]]) / np.sqrt(2)
    return Operator(t, Space.composite(dim), unitary=True)


def _frame_drive(tones, t, dim, e_mat) -> np.ndarray:
    sp = np.kron(np.array([[0, 1], [0, 0]]), e_mat)
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    for tone in tones:
        if tone.epsilon == 0:
            continue
        out += 0.5 * tone.epsilon * np.exp(-1j * _theta(tone, t)) * sp
    return out + out.conj().T


def h_a(params: RabiParams, tones: Sequence[DriveTone], t: float, dim: int) -> Operator:
    """Displaced-frame Hamiltonian without its constant shift -g^2/w."""
    e_mat = _displacement_cached(dim, complex(-2.0 * params.g / params.omega))
    h = _frame_drive(tones, t, dim, e_mat)
    h += np.diag(composite_ops(dim)["num"] * params.omega)
    return Operator(h, Space.composite(dim), hermitian=True)


def h_b(params: RabiParams, tones: Sequence[DriveTone], t: float, dim: int) -> Operator:
    """Interaction-picture Hamiltonian; E(t) = U0^dag E U0 is applied exactly."""
    e_mat = _displacement_cached(dim, complex(-2.0 * params.g / params.omega))
    u = _boson_phase(dim, params.omega * t)
    e_t = (u.conj()[:, None] * e_mat) * u[None, :]
    return Operator(_frame_drive(tones, t, dim, e_t), Space.composite(dim), hermitian=True)


# --- effective Hamiltonians ------------------------------------------------

def _power(dim: int, n: int) -> np.ndarray:
    if n < 1:
        raise InvalidOrderError(f"photon order must be >= 1, got {n}")
    if n >= dim:
        raise InvalidOrderError(f"a^{n} vanishes on a {dim}-level truncation")
    return np.linalg.matrix_power(annihilation(dim).data, n)


def h_nphot(params: RabiParams, n: int, phase: float, epsilon: float, dim: int) -> Operator:
    """g_n sx (a^n e^{-i phi} + h.c.)."""
    an = _power(dim, n) * np.exp(-1j * phase)
    gn = coupling_constant(params, epsilon, n)
    sx = np.array([[0, 1], [1, 0]])
    return Operator(gn * np.kron(sx, an + an.conj().T), Space.composite(dim), hermitian=True)


def h_nphot_s(params: RabiParams, n: int, epsilon: float, dim: int) -> Operator:
    """i g_n sy (a^dag^n - a^n)."""
    an = _power(dim, n)
    gn = coupling_constant(params, epsilon, n)
    sy = np.array([[0, -1j], [1j, 0]])
    return Operator(1j * gn * np.kron(sy, an.conj().T - an), Space.composite(dim), hermitian=True)


def h_rotation(params: RabiParams, epsilon: float, dim: int) -> Operator:
    """(g0 - g2) sx - 2 g2 sx a^dag a, keeping the constant sx term."""
    g0 = coupling_constant(params, epsilon, 0)
    g2 = coupling_constant(params, epsilon, 2)
    sx = np.array([[0, 1], [1, 0]])
    n_op = np.diag(np.arange(dim, dtype=float))
    h = np.kron(sx, (g0 - g2) * np.eye(dim) - 2.0 * g2 * n_op)
    return Operator(h, Space.composite(dim), hermitian=True)


def rotation_angle(params: RabiParams, epsilon: float, t: float, branch: str = "minus_x") -> float:
    """Angle theta of exp(-i theta a^dag a) produced by the rotation drive over time t."""
    g2 = coupling_constant(params, epsilon, 2)
    sign = {"plus_x": -1.0, "minus_x": 1.0}[branch]
    return sign * 2.0 * g2 * t


# --- frame maps ------------------------------------------------------------

def free_evolution(dim: int, omega_t: float) -> Operator:
    """U0 = exp(-i w t a^dag a) lifted to the composite space."""
    u = _boson_phase(dim, omega_t)
    return Operator(np.diag(np.concatenate([u, u])), Space.composite(dim), unitary=True)


def frame_lambda(params: RabiParams, t: float, dim: int) -> Operator:
    """Lambda(t) = T(-g/w) U0(t)."""
    tmat = qubit_displacement_T(dim, -params.g / params.omega).data
    u = _boson_phase(dim, params.omega * t)
    return Operator(tmat * np.concatenate([u, u])[None, :], Space.composite(dim), unitary=True)


def _check_composite(state: QuantumState):
    if not state.space.is_composite:
        raise UsageError(f"expected a composite state, got {state.space}")


def to_lab(state: QuantumState, t: float, params: RabiParams) -> QuantumState:
    _check_composite(state)
    return state.transform(frame_lambda(params, t, state.space.boson))


def to_nphot(state: QuantumState, t: float, params: RabiParams) -> QuantumState:
    _check_composite(state)
    return state.transform(frame_lambda(params, t, state.space.boson).dag())


_OUTCOMES = {"plus_x": plus_x, "minus_x": minus_x, "qubit0": qubit0, "qubit1": qubit1}


def project_qubit(state: QuantumState, outcome: str, *, reduce: bool = False):
    """Project the qubit onto ``outcome``.

    Returns ``(post_state, probability)``. The post-measurement state is the
    normalised composite state, or only its bosonic factor when ``reduce`` is set.
    """
    _check_composite(state)
    if outcome not in _OUTCOMES:
        raise UsageError(f"unknown qubit outcome {outcome!r}")
    d = state.space.boson
    e = _OUTCOMES[outcome]().data
    if state.is_pure:
        b = e.conj() @ state.data.reshape(2, d)
        prob = float(np.vdot(b, b).real)
        if prob <= 1e-12:
            raise DegenerateProjectionError(f"outcome {outcome} has probability {prob:.2e}")
        b = b / np.sqrt(prob)
        if reduce:
            return QuantumState(b, Space.fock(d)), prob
        return QuantumState(np.kron(e, b), state.space), prob
    r = state.data.reshape(2, d, 2, d)
    rb = np.einsum("i,ijkl,k->jl", e.conj(), r, e)
    prob = float(np.trace(rb).real)
    if prob <= 1e-12:
        raise DegenerateProjectionError(f"outcome {outcome} has probability {prob:.2e}")
    rb = rb / prob
    rb = (rb + rb.conj().T) / 2
    if reduce:
        return QuantumState(rb, Space.fock(d)), prob
    return QuantumState(np.kron(np.outer(e, e.conj()), rb), state.space), prob


# --- tuning rules ----------------------------------------------------------

GATE_KINDS = ("displacement", "squeeze", "nphot", "nphot_s", "rotation")


def tuning_for_gate(kind: str, params: RabiParams, epsilon: float, *, n: int | None = None,
                    phase: float = 0.0) -> tuple[DriveTone, DriveTone]:
    """Two-tone settings that realise the requested effective Hamiltonian.

    ``displacement`` and ``squeeze`` are the n = 1, 2 cases of ``nphot``;
    ``nphot_s`` uses equal amplitudes with phi_0 = pi.
    """
    w = params.omega
    if kind == "rotation":
        return DriveTone(0.0, epsilon, 0.0), DriveTone(0.0, 0.0, 0.0)
    if kind == "displacement":
        n = 1
    elif kind == "squeeze":
        n = 2
    elif kind not in ("nphot", "nphot_s"):
        raise UnknownGateError(f"unknown gate kind {kind!r}")
    if n is None or int(n) != n or n < 1:
        raise InvalidOrderError(f"photon order must be a positive integer, got {n}")
    n = int(n)
    parity = (n % 2) * np.pi
    if kind == "nphot_s":
        return DriveTone(-n * w, epsilon, np.pi), DriveTone(n * w, epsilon, parity)
    return DriveTone(-n * w, epsilon, phase), DriveTone(n * w, epsilon, -phase + parity)
