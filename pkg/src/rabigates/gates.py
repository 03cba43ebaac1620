"""Target gates, multi-squeezed and cat states, schedule compilation and the cubic-phase sequence.

Sign convention: with the qubit in |+_x> the n-photon Hamiltonian acts on the
oscillator as +g_n K_phi with K_phi = a^n e^{-i phi} + h.c., so the realised
gate is exp(-i gamma K_phi); the |-_x> branch gives exp(+i gamma K_phi).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BracketError,
    DegenerateSuperpositionError,
    InvalidOrderError,
    LambDickeError,
    LeakageError,
    TrotterRegimeError,
    UsageError,
)
from .evolution import IntegratorSpec, NoiseConfig, PeriodPropagator, evolve_lindblad_periodic
from .fock import (
    Operator,
    QuantumState,
    Space,
    annihilation,
    leakage_guard_levels,
    plus_x,
    product_state,
    vacuum,
)
from .hamiltonians import (
    DriveTone,
    LabHamiltonian,
    RabiParams,
    coupling_constant,
    frame_lambda,
    project_qubit,
    tuning_for_gate,
)

LEAKAGE_TOL = 1e-6
BRANCHES = ("plus_x", "minus_x")


@dataclass(frozen=True)
class GateSpec:
    n: int
    gamma: float
    phase: float = 0.0
    branch: str = "plus_x"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidOrderError(f"gate order must be a positive integer, got {self.n}")
        if not np.isfinite(self.gamma):
            raise UsageError("gamma must be finite")
        if self.branch not in BRANCHES:
            raise UsageError(f"branch must be one of {BRANCHES}, got {self.branch!r}")

    @property
    def sign(self) -> int:
        """-1 for the exp(-i gamma K) branch, +1 for its conjugate."""
        return -1 if self.branch == "plus_x" else 1

    def conjugate(self) -> "GateSpec":
        return GateSpec(self.n, self.gamma, self.phase, "minus_x" if self.branch == "plus_x" else "plus_x")


@lru_cache(maxsize=64)
def _generator_eigh(dim: int, n: int, phase: float):
    if n >= dim:
        raise InvalidOrderError(f"a^{n} vanishes on a {dim}-level truncation")
    an = np.linalg.matrix_power(annihilation(dim).data, n) * np.exp(-1j * phase)
    w, v = np.linalg.eigh(an + an.conj().T)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def _check_leakage(psi: np.ndarray, dim: int, tol: float | None, what: str):
    if tol is None:
        return
    k = leakage_guard_levels(dim)
    leak = float(np.sum(np.abs(psi[dim - k:]) ** 2))
    if leak > tol:
        raise LeakageError(f"{what}: {leak:.2e} of the population sits in the top {k} levels")


def gate_matrix(spec: GateSpec, dim: int, *, leakage_tol: float | None = LEAKAGE_TOL) -> Operator:
    """exp(-/+ i gamma (a^n e^{-i phi} + h.c.)) with the sign set by the branch."""
    w, v = _generator_eigh(dim, spec.n, float(spec.phase))
    u = (v * np.exp(1j * spec.sign * spec.gamma * w)) @ v.conj().T
    _check_leakage(u[:, 0], dim, leakage_tol, "gate_matrix")
    return Operator(u, Space.fock(dim), unitary=True)


def multi_squeezed(dim: int, n: int, gamma: float, *, leakage_tol: float | None = LEAKAGE_TOL) -> QuantumState:
    """|gamma_n> = G_{n,0}|0>."""
    w, v = _generator_eigh(dim, n, 0.0)
    psi = v @ (np.exp(-1j * gamma * w) * v[0].conj())
    _check_leakage(psi, dim, leakage_tol, "multi_squeezed")
    return QuantumState.pure(psi, Space.fock(dim), normalize=True)


def _energy(dim: int, n: int, gamma: float) -> float:
    psi = multi_squeezed(dim, n, gamma, leakage_tol=None).data
    return float(np.sum(np.arange(dim) * np.abs(psi) ** 2))


def energy_to_gamma(n: int, target_energy: float, dim: int, *, scan_points: int = 64) -> float:
    """Amplitude gamma >= 0 with <gamma_n|a^dag a|gamma_n> = target_energy.

    The energy is scanned on a uniform grid up to the first crossing, checked
    to increase monotonically there, and the crossing is refined by Brent's method.
    """
    if not 0 <= target_energy <= dim / 10:
        raise BracketError(f"target energy {target_energy} outside [0, {dim / 10}]")
    if target_energy == 0:
        return 0.0
    hi = 0.05
    for _ in range(40):
        if _energy(dim, n, hi) > target_energy:
            break
        hi *= 2
    else:
        raise BracketError("energy never reaches the target")
    grid = np.linspace(0.0, hi, scan_points)
    energies = np.array([_energy(dim, n, g) for g in grid])
    k = int(np.argmax(energies > target_energy))
    if k == 0 or np.any(np.diff(energies[: k + 1]) <= 0):
        raise BracketError("energy is not monotone below the target")
    return float(brentq(lambda g: _energy(dim, n, g) - target_energy, grid[k - 1], grid[k],
                        xtol=1e-14, rtol=1e-12))


# --- schedules ---------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """A constant-tuning stretch of drive.

    ``duration`` is a whole number of oscillator periods; the tone amplitude
    is lowered from the requested one so that g_n * duration equals gamma
    exactly. ``nominal_duration`` is gamma / g_n at the requested amplitude.
    """

    tones: tuple[DriveTone, DriveTone]
    duration: float
    nominal_duration: float
    gate: GateSpec
    realized: GateSpec


@dataclass(frozen=True)
class Pulse:
    """Instantaneous lab-frame qubit rotation exp(-i angle/2 sigma_axis) before segment ``index``."""

    axis: str
    angle: float
    index: int

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise UsageError(f"pulse axis must be x, y or z, got {self.axis!r}")

    def matrix(self) -> np.ndarray:
        s = {"x": [[0, 1], [1, 0]], "y": [[0, -1j], [1j, 0]], "z": [[1, 0], [0, -1]]}[self.axis]
        return np.cos(self.angle / 2) * np.eye(2) - 1j * np.sin(self.angle / 2) * np.array(s)


# A pi-pulse about z in the n-photon frame, seen in the lab frame.
FLIP = ("x", -np.pi)


@dataclass(frozen=True)
class DriveSchedule:
    params: RabiParams
    segments: tuple[Segment, ...]
    pulses: tuple[Pulse, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for s in self.segments:
            if not s.duration > 0:
                raise UsageError("segment durations must be positive")

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def pulses_at(self, index: int) -> list[Pulse]:
        return [p for p in self.pulses if p.index == index]


def _lamb_dicke_check(program: Sequence[GateSpec], params: RabiParams, dim: int):
    psi = vacuum(dim).data
    a = annihilation(dim).data
    x = a + a.conj().T
    worst = 1.0
    for spec in program:
        psi = gate_matrix(GateSpec(spec.n, spec.gamma, spec.phase), dim, leakage_tol=None).data @ psi
        worst = max(worst, float(np.real(np.vdot(x @ psi, x @ psi))))
    ratio = abs(params.lamb_dicke) * np.sqrt(worst)
    if ratio > 1:
        raise LambDickeError(f"Lamb-Dicke ratio {ratio:.2f} exceeds 1")
    if ratio > 0.5:
        warnings.warn(f"Lamb-Dicke ratio {ratio:.2f} exceeds 0.5", RuntimeWarning, stacklevel=3)
    return ratio


def compile_schedule(program: Sequence[GateSpec], params: RabiParams, epsilon: float, *,
                     conjugation: str = "phase", check_dim: int = 60) -> DriveSchedule:
    """Turn a gate program into drive segments and qubit pulses.

    The qubit is assumed to start (and is returned) in |+_x> of the n-photon
    frame. Gates on the |-_x> branch are made either by shifting the drive
    phase by pi (``conjugation='phase'``) or by flipping the qubit with a
    pi-pulse (``conjugation='pulse'``); flips are inserted lazily and undone
    after the last segment.
    """
    program = list(program)
    if not program:
        raise UsageError("empty gate program")
    if conjugation not in ("phase", "pulse"):
        raise UsageError(f"unknown conjugation method {conjugation!r}")
    if not epsilon > 0:
        raise UsageError("epsilon must be positive")
    _lamb_dicke_check(program, params, check_dim)
    segments, pulses = [], []
    qubit = "plus_x"
    for i, spec in enumerate(program):
        phase = spec.phase
        if conjugation == "phase":
            if spec.branch == "minus_x":
                phase = spec.phase + np.pi
            realized = GateSpec(spec.n, spec.gamma, phase, "plus_x")
        else:
            if spec.branch != qubit:
                pulses.append(Pulse(*FLIP, index=i))
                qubit = spec.branch
            realized = spec
        gn = coupling_constant(params, epsilon, spec.n)
        nominal = abs(spec.gamma) / gn
        periods = max(1, math.ceil(nominal / params.period - 1e-9))
        duration = periods * params.period
        eps = epsilon * nominal / duration
        gamma = spec.gamma
        if gamma < 0:
            # negative amplitudes are the conjugate drive phase
            realized = GateSpec(realized.n, -gamma, realized.phase + np.pi, realized.branch)
        tones = tuning_for_gate("nphot", params, eps, n=spec.n, phase=realized.phase)
        segments.append(Segment(tones, duration, nominal, spec, realized))
    if qubit != "plus_x":
        pulses.append(Pulse(*FLIP, index=len(program)))
    return DriveSchedule(params, tuple(segments), tuple(pulses))


def schedule_target(schedule: DriveSchedule, dim: int) -> Operator:
    """Product of the ideal gates in program order (last gate leftmost)."""
    u = np.eye(dim, dtype=complex)
    for seg in schedule.segments:
        u = gate_matrix(seg.gate, dim, leakage_tol=None).data @ u
    return Operator(u, Space.fock(dim))


def simulate_schedule(schedule: DriveSchedule, dim: int, boson0: QuantumState | None = None, *,
                      readout: str = "project", noise: NoiseConfig | None = None,
                      spec: IntegratorSpec | None = None):
    """Drive-level simulation of a schedule.

    The n-photon-frame input |+_x>|boson0> is mapped to the lab frame with
    Lambda(0), evolved under H_lab segment by segment, mapped back with
    Lambda(t_end) and read out on the oscillator by projecting the qubit on
    |+_x> (``readout='project'``) or tracing it (``'trace'``). Returns the
    bosonic state and the projection probability (1 for a trace).
    """
    params = schedule.params
    boson0 = boson0 if boson0 is not None else vacuum(dim)
    psi = product_state(plus_x(), boson0)
    lam0 = frame_lambda(params, 0.0, dim)
    state = psi.transform(lam0)
    mixed = noise is not None and not noise.is_zero
    if mixed:
        state = state.to_mixed()
    cache: dict = {}
    eye_b = np.eye(dim)
    for i, seg in enumerate(list(schedule.segments) + [None]):
        for p in schedule.pulses_at(i):
            state = state.transform(Operator(np.kron(p.matrix(), eye_b), state.space))
        if seg is None:
            break
        key = seg.tones
        if key not in cache:
            ham = LabHamiltonian(params, seg.tones, dim)
            cache[key] = PeriodPropagator(ham, spec or IntegratorSpec(rel_tol=1e-12, abs_tol=1e-13))
        prop = cache[key]
        periods = prop.periods_for(seg.duration)
        if mixed:
            state = evolve_lindblad_periodic(prop, state, noise, periods)
        else:
            u = np.linalg.matrix_power(prop.step, periods)
            state = QuantumState(u @ state.data, state.space, check=False)
    state = state.transform(frame_lambda(params, schedule.total_duration, dim).dag())
    if readout == "project":
        return project_qubit(state, "plus_x", reduce=True)
    if readout == "trace":
        return state.ptrace_qubit(), 1.0
    raise UsageError(f"unknown readout {readout!r}")


# --- cubic-phase sequence ----------------------------------------------------

BLOCK_ORDERS = ("derived", "printed")


@dataclass(frozen=True)
class CubicSpec:
    """Trotter block parameters; tau_k are durations in units of 1/omega."""

    tau1: float
    tau2: float
    tau4: float
    n_blocks: int
    g1: float
    g2: float
    g4: float
    omega: float = 1.0

    def __post_init__(self):
        period = 2 * np.pi / self.omega
        for name in ("tau1", "tau2", "tau4"):
            k = getattr(self, name) / period
            if k < 0 or abs(k - round(k)) > 1e-9 * max(1.0, k):
                raise UsageError(f"{name} must be a whole number of oscillator periods")
        if int(self.n_blocks) != self.n_blocks or self.n_blocks < 0:
            raise UsageError("n_blocks must be a non-negative integer")
        if self.delta > 1e-3:
            raise TrotterRegimeError(f"delta = {self.delta:.3e} exceeds 1e-3")

    @classmethod
    def from_periods(cls, params: RabiParams, epsilon: float, periods: tuple[int, int, int],
                     n_blocks: int) -> "CubicSpec":
        t = [k * params.period for k in periods]
        gs = [coupling_constant(params, epsilon, n) for n in (1, 2, 4)]
        return cls(*t, n_blocks, *gs, omega=params.omega)

    @property
    def delta(self) -> float:
        return 8 * self.tau1 * self.g1 * self.tau2 * self.g2 * self.tau4 * self.g4

    @property
    def cubicity(self) -> float:
        return self.n_blocks * self.delta


def cubic_generators(spec: CubicSpec, dim: int) -> dict:
    """H_1s = i g1 (a^dag - a), H_2s = i g2 (a^dag^2 - a^2), H_4 = g4 (a^4 + a^dag^4)."""
    a = annihilation(dim).data
    ad = a.conj().T
    mp = np.linalg.matrix_power
    return {
        1: 1j * spec.g1 * (ad - a),
        2: 1j * spec.g2 * (mp(ad, 2) - mp(a, 2)),
        4: spec.g4 * (mp(a, 4) + mp(ad, 4)),
    }


def _herm_exp(h: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def cubic_block_factors(spec: CubicSpec, dim: int, order: str = "derived") -> list[np.ndarray]:
    """The ten unitaries of one block, leftmost first.

    ``derived`` nests the two group commutators as
    U1^dag (U4^dag U2^dag U4 U2) U1 (U2^dag U4^dag U2 U4), which carries the
    sign of exp(-i delta X^3); ``printed`` has U1 and U1^dag exchanged.
    """
    if order not in BLOCK_ORDERS:
        raise UsageError(f"block order must be one of {BLOCK_ORDERS}")
    h = cubic_generators(spec, dim)
    u1, u2, u4 = (_herm_exp(h[1], spec.tau1), _herm_exp(h[2], spec.tau2), _herm_exp(h[4], spec.tau4))
    d = lambda u: u.conj().T  # noqa: E731
    first, fourth = (d(u1), u1) if order == "derived" else (u1, d(u1))
    return [first, d(u4), d(u2), u4, u2, fourth, d(u2), d(u4), u2, u4]


def cubic_block_analytic(spec: CubicSpec, dim: int, order: str = "derived") -> Operator:
    block = np.linalg.multi_dot(cubic_block_factors(spec, dim, order))
    return Operator(block, Space.fock(dim), unitary=True)


def cubic_sequence(spec: CubicSpec, dim: int, order: str = "derived") -> Operator:
    """(U_block)^N, folded left to right."""
    block = cubic_block_analytic(spec, dim, order).data
    out = np.eye(dim, dtype=complex)
    for _ in range(spec.n_blocks):
        out = out @ block
    return Operator(out, Space.fock(dim), unitary=True)


def cubic_gate(dim: int, gamma_c: float, *, leakage_tol: float | None = LEAKAGE_TOL) -> Operator:
    """G_c = exp(-i gamma_c (a + a^dag)^3)."""
    a = annihilation(dim).data
    x = a + a.conj().T
    u = _herm_exp(x @ x @ x, gamma_c)
    _check_leakage(u[:, 0], dim, leakage_tol, "cubic_gate")
    return Operator(u, Space.fock(dim), unitary=True)


# --- cat states --------------------------------------------------------------

def cat_state(dim: int, n: int, gamma: float, params: RabiParams, conjugation: str = "exact_D", *,
              leakage_tol: float | None = LEAKAGE_TOL) -> QuantumState:
    """Normalised D (G_n + G_n^dag) D^dag |0> with D = D(-g/omega) or the identity."""
    from .fock import displacement

    if conjugation == "exact_D":
        dmat = displacement(dim, -params.g / params.omega).data
    elif conjugation == "identity_D":
        dmat = np.eye(dim)
    else:
        raise UsageError(f"unknown conjugation {conjugation!r}")
    g = gate_matrix(GateSpec(n, gamma), dim, leakage_tol=None).data
    psi = dmat @ ((g + g.conj().T) @ (dmat.conj().T[:, 0]))
    nrm = np.linalg.norm(psi)
    if nrm < 1e-10:
        raise DegenerateSuperpositionError("G + G^dag annihilates the input")
    psi = psi / nrm
    _check_leakage(psi, dim, leakage_tol, "cat_state")
    return QuantumState(psi, Space.fock(dim))
