"""Drive-level experiments built from the library primitives.

Each function returns a plain dataclass of scalars (plus states where they are
useful downstream) so that the CLI and the acceptance checks share one code path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import UsageError
from .evolution import (
    IntegratorSpec,
    NoiseConfig,
    PeriodPropagator,
    evolve_lindblad_periodic,
)
from .fock import QuantumState, Space, product_state, plus_x, vacuum
from .gates import (
    CubicSpec,
    GateSpec,
    compile_schedule,
    cubic_block_analytic,
    cubic_gate,
    cubic_sequence,
    energy_to_gamma,
    gate_matrix,
    multi_squeezed,
    schedule_target,
    simulate_schedule,
)
from .hamiltonians import (
    LabHamiltonian,
    RabiParams,
    coupling_constant,
    frame_lambda,
    project_qubit,
    tuning_for_gate,
)
from .metrics import (
    WignerGrid,
    cross_section,
    fidelity,
    mana,
    mean_photon,
    optimal_amplitude,
)

PROPAGATOR_SPEC = IntegratorSpec(rel_tol=1e-12, abs_tol=1e-13)


def _frame_params(params: RabiParams, init: str) -> RabiParams:
    """Parameters of the frame map: exact Lambda, or its g -> 0 limit."""
    if init == "exact":
        return params
    if init == "approx":
        return RabiParams(g=0.0, omega=params.omega)
    raise UsageError(f"unknown initial-state mode {init!r}")


def reduce_qubit(state: QuantumState, reduction: str) -> tuple[QuantumState, float]:
    """Bosonic state after tracing the qubit or projecting it on |+_x>."""
    if reduction == "trace":
        return state.ptrace_qubit(), 1.0
    if reduction == "project":
        return project_qubit(state, "plus_x", reduce=True)
    raise UsageError(f"unknown reduction {reduction!r}")


def nphot_propagator(params: RabiParams, epsilon: float, n: int, dim: int, *,
                     phase: float = 0.0, substeps: int = 16,
                     spec: IntegratorSpec = PROPAGATOR_SPEC) -> PeriodPropagator:
    tones = tuning_for_gate("nphot", params, epsilon, n=n, phase=phase)
    spec = IntegratorSpec(spec.rel_tol, spec.abs_tol, spec.max_step, spec.method_order, substeps)
    return PeriodPropagator(LabHamiltonian(params, tones, dim), spec)


# --- generation ---------------------------------------------------------------

@dataclass
class GenerationPoint:
    energy_request: float
    periods: int
    duration: float
    gamma: float
    energy: float
    target_energy: float
    fidelity: float
    probability: float
    state: QuantumState = field(repr=False)
    target: QuantumState = field(repr=False)
    mana_generated: float = float("nan")
    mana_target: float = float("nan")
    norm_generated: float = float("nan")
    norm_target: float = float("nan")


def generation_scan(params: RabiParams, epsilon: float, n: int, energies: Sequence[float], dim: int, *,
                    init: str = "exact", reduction: str = "trace", energy_ref: str = "generated",
                    max_periods: int = 200_000, prop: PeriodPropagator | None = None) -> list[GenerationPoint]:
    """Grow the n-photon state period by period and record each requested energy.

    ``energy_ref='generated'`` stops at the first period where the generated
    state's <a^dag a> reaches the request; ``'target'`` stops at the period
    closest to gamma/g_n with gamma from the ideal state's energy. The ideal
    target always uses gamma = g_n * (elapsed time).
    """
    if energy_ref not in ("generated", "target"):
        raise UsageError(f"unknown energy reference {energy_ref!r}")
    order = np.argsort(energies)
    energies = [float(energies[i]) for i in order]
    prop = prop or nphot_propagator(params, epsilon, n, dim)
    gn = coupling_constant(params, epsilon, n)
    fp = _frame_params(params, init)
    lam = frame_lambda(fp, 0.0, dim)
    state = product_state(plus_x(), vacuum(dim)).transform(lam)
    lam_dag = lam.dag()
    stops = []
    if energy_ref == "target":
        for e in energies:
            g = energy_to_gamma(n, e, dim)
            stops.append(max(1, int(round(g / gn / params.period))))
    points: list[GenerationPoint] = []
    psi = np.array(state.data)
    p = 0
    for idx, e in enumerate(energies):
        while True:
            if energy_ref == "target" and p >= stops[idx]:
                break
            if p >= max_periods:
                raise UsageError(f"energy {e} not reached within {max_periods} periods")
            psi = prop.step @ psi
            p += 1
            if energy_ref == "generated":
                red, _ = reduce_qubit(QuantumState(lam_dag.data @ psi, state.space, check=False), reduction)
                if mean_photon(red) >= e:
                    break
        final = QuantumState(lam_dag.data @ psi, state.space, check=False)
        red, prob = reduce_qubit(final, reduction)
        gamma = gn * p * params.period
        target = multi_squeezed(dim, n, gamma, leakage_tol=None)
        points.append(GenerationPoint(e, p, p * params.period, gamma, mean_photon(red), mean_photon(target),
                                      fidelity(red, target), prob, red, target))
    inverse = np.empty_like(order)
    inverse[order] = np.arange(len(order))
    return [points[i] for i in inverse]


def attach_mana(point: GenerationPoint, grid: WignerGrid = WignerGrid()) -> GenerationPoint:
    """Mana of the generated and ideal states; the Wigner normalisations are kept for the grid check."""
    m = mana(point.state, grid, strict=False)
    point.mana_generated, point.norm_generated = m.value, m.normalization
    m = mana(point.target, grid, strict=False)
    point.mana_target, point.norm_target = m.value, m.normalization
    return point


# --- noisy runs ------------------------------------------------------------------

@dataclass
class NoisyResult:
    gamma: float
    periods: int
    duration: float
    gamma_m: float
    fidelity: float
    mana: float
    ideal_mana: float
    readout: str
    init: str
    min_eigenvalue: float
    trace: float
    state: QuantumState = field(repr=False)
    other_readout: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict, repr=False)


def _noisy_readout(rho_lab: QuantumState, params_frame: RabiParams, duration: float, readout: str):
    if readout == "lab":
        return rho_lab.ptrace_qubit()
    if readout == "nphot":
        lam = frame_lambda(params_frame, duration, rho_lab.space.boson)
        return rho_lab.transform(lam.dag()).ptrace_qubit()
    raise UsageError(f"unknown readout {readout!r}")


def noisy_run(params: RabiParams, epsilon: float, n: int, gamma: float, dim: int, noise: NoiseConfig, *,
              init: str = "exact", readout: str = "lab", bracket: tuple[float, float] | None = None,
              substeps: int = 16, section_p: Sequence[float] = (-1.6, 2.0),
              grid: WignerGrid = WignerGrid(), spec: IntegratorSpec = PROPAGATOR_SPEC) -> NoisyResult:
    """Lindblad evolution of one n-photon gate on |+_x>|0> followed by the amplitude fit.

    ``init`` picks the exact frame map or its g -> 0 limit for the input state;
    ``readout='lab'`` traces the qubit of the lab-frame state while ``'nphot'``
    first undoes Lambda. Both readouts are evaluated; the selected one is primary.
    """
    schedule = compile_schedule([GateSpec(n, gamma)], params, epsilon)
    seg = schedule.segments[0]
    spec = IntegratorSpec(spec.rel_tol, spec.abs_tol, spec.max_step, spec.method_order, substeps)
    prop = PeriodPropagator(LabHamiltonian(params, seg.tones, dim), spec)
    periods = prop.periods_for(seg.duration)
    fp = _frame_params(params, init)
    rho0 = product_state(plus_x(), vacuum(dim)).transform(frame_lambda(fp, 0.0, dim))
    rho = evolve_lindblad_periodic(prop, rho0, noise, periods)
    w = np.linalg.eigvalsh(rho.data)
    bracket = bracket or (0.0, 1.5 * gamma)
    results = {}
    for mode in ("lab", "nphot"):
        red = _noisy_readout(rho, fp, seg.duration, mode)
        g_m, f = optimal_amplitude(red, n, bracket)
        results[mode] = (red, g_m, f)
    red, g_m, f = results[readout]
    ideal = multi_squeezed(dim, n, g_m, leakage_tol=None)
    q = grid.q
    sections = {"q": q}
    for p in section_p:
        sections[f"generated_p{p:g}"] = cross_section(red, p, q)
        sections[f"ideal_p{p:g}"] = cross_section(ideal, p, q)
    other = {}
    for mode, (r, gm, fm) in results.items():
        if mode != readout:
            other = {"readout": mode, "gamma_m": gm, "fidelity": fm,
                     "mana": mana(r, grid).value,
                     "ideal_mana": mana(multi_squeezed(dim, n, gm, leakage_tol=None), grid).value}
    return NoisyResult(gamma, periods, seg.duration, g_m, f, mana(red, grid).value, mana(ideal, grid).value,
                       readout, init, float(w.min()), float(np.trace(rho.data).real), red, other, sections)


# --- cubic phase -----------------------------------------------------------------

@dataclass
class CubicResult:
    delta: float
    gamma_c: float
    block_fidelity: float
    fidelity: float
    mana: float
    target_mana: float
    order: str
    state: QuantumState = field(repr=False)


def cubic_run(params: RabiParams, epsilon: float, periods: tuple[int, int, int], n_blocks: int, dim: int, *,
              order: str = "derived", grid: WignerGrid = WignerGrid()) -> CubicResult:
    spec = CubicSpec.from_periods(params, epsilon, periods, n_blocks)
    vac = vacuum(dim).data
    block = cubic_block_analytic(spec, dim, order).data
    ideal_block = cubic_gate(dim, spec.delta, leakage_tol=None).data
    block_f = float(abs(np.vdot(ideal_block @ vac, block @ vac)) ** 2)
    psi = vac.copy()
    for _ in range(spec.n_blocks):
        psi = block @ psi
    state = QuantumState.pure(psi, Space.fock(dim), normalize=True)
    target = QuantumState(cubic_gate(dim, spec.cubicity).data[:, 0], Space.fock(dim))
    return CubicResult(spec.delta, spec.cubicity, block_f, fidelity(state, target), mana(state, grid).value,
                       mana(target, grid).value, order, state)


def cubic_sequence_state(params: RabiParams, epsilon: float, periods, n_blocks: int, dim: int,
                         order: str = "derived") -> QuantumState:
    """(U_block)^N |0> via the full operator fold (slower than cubic_run; used for cross-checks)."""
    spec = CubicSpec.from_periods(params, epsilon, periods, n_blocks)
    u = cubic_sequence(spec, dim, order).data
    return QuantumState(u[:, 0], Space.fock(dim))


def gate_spot_check(params: RabiParams, epsilon: float, n: int, phase: float, periods: int, dim: int, *,
                    branch: str = "plus_x") -> float:
    """Fidelity of one drive-level n-photon gate against its analytic action on vacuum."""
    gamma = coupling_constant(params, epsilon, n) * periods * params.period
    spec = GateSpec(n, gamma, phase, branch)
    schedule = compile_schedule([spec], params, epsilon)
    out, _ = simulate_schedule(schedule, dim)
    target = gate_matrix(spec, dim, leakage_tol=None).data[:, 0]
    return fidelity(out, QuantumState(target, Space.fock(dim)))


# --- cats ------------------------------------------------------------------------

@dataclass
class CatResult:
    n: int
    gamma: float
    energy: float
    mana: float
    probability: float
    mode: str
    state: QuantumState = field(repr=False)


def cat_run(params: RabiParams, epsilon: float, n: int, gamma: float, dim: int, *, mode: str = "drive",
            grid: WignerGrid = WignerGrid()) -> CatResult:
    """Cat-like superposition from a lab-frame |+_x>|0> input and a lab-frame |+_x> projection.

    ``mode='drive'`` integrates H_lab for the compiled gate duration;
    ``'analytic'`` and ``'analytic_identity'`` use D (G + G^dag) D^dag |0>
    with the exact displacement or with D replaced by the identity.
    """
    from .gates import cat_state

    if mode == "analytic":
        st, prob = cat_state(dim, n, gamma, params, "exact_D", leakage_tol=None), float("nan")
    elif mode == "analytic_identity":
        st, prob = cat_state(dim, n, gamma, params, "identity_D", leakage_tol=None), float("nan")
    elif mode == "drive":
        schedule = compile_schedule([GateSpec(n, gamma)], params, epsilon)
        seg = schedule.segments[0]
        prop = PeriodPropagator(LabHamiltonian(params, seg.tones, dim), PROPAGATOR_SPEC)
        psi = product_state(plus_x(), vacuum(dim)).data
        u = np.linalg.matrix_power(prop.step, prop.periods_for(seg.duration))
        lab = QuantumState(u @ psi, Space.composite(dim), check=False)
        st, prob = project_qubit(lab, "plus_x", reduce=True)
    else:
        raise UsageError(f"unknown cat mode {mode!r}")
    return CatResult(n, gamma, mean_photon(st), mana(st, grid).value, prob, mode, st)


# --- schedules ---------------------------------------------------------------------

def schedule_check(params: RabiParams, epsilon: float, program: Sequence[GateSpec], dim: int, *,
                   conjugation: str = "phase", readout: str = "project") -> dict:
    """Drive-level schedule against the ideal gate product on vacuum."""
    schedule = compile_schedule(program, params, epsilon, conjugation=conjugation)
    out, prob = simulate_schedule(schedule, dim, readout=readout)
    target = schedule_target(schedule, dim).data[:, 0]
    return {
        "fidelity": fidelity(out, QuantumState.pure(target, Space.fock(dim), normalize=True)),
        "probability": prob,
        "duration": schedule.total_duration,
        "segments": len(schedule.segments),
        "pulses": len(schedule.pulses),
    }
