"""Acceptance criteria as runnable checks.

Every criterion is evaluated at a base truncation and at twice that
truncation. A scalar check passes only if it is within tolerance at both
truncations; the spread between the two runs is reported next to it.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import experiments as ex
from .errors import RabiGatesError
from .evolution import IntegratorSpec, NoiseConfig, PeriodPropagator, evolve_pure
from .fock import (
    QuantumState,
    Space,
    annihilation,
    displacement,
    squeeze,
    vacuum,
    Operator,
)
from .gates import CubicSpec, GateSpec, cubic_block_analytic, cubic_gate, cubic_generators, gate_matrix, multi_squeezed
from .hamiltonians import (
    LabHamiltonian,
    RabiParams,
    frame_lambda,
    qubit_displacement_T,
    to_lab,
    to_nphot,
    tuning_for_gate,
)
from .metrics import fock_tail, mana


@dataclass
class Check:
    name: str
    values: list
    expected: str
    passed: bool

    def line(self) -> str:
        vals = ", ".join(_fmt(v) for v in self.values)
        return f"    [{'ok' if self.passed else 'MISS'}] {self.name}: {vals} (expected {self.expected})"


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    runtime: float = 0.0
    dims: tuple = ()
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        n_ok = sum(c.passed for c in self.checks)
        tail = f" error: {self.error}" if self.error else ""
        return (f"{status} criterion {self.number}: {self.title} "
                f"[{n_ok}/{len(self.checks)} checks, dims {self.dims}, {self.runtime:.0f}s]{tail}")

    def report(self) -> str:
        return "\n".join([self.summary()] + [c.line() for c in self.checks])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{v:.5g}"
    return str(v)


def band(name: str, values, center: float, half: float, *, relative: bool = False) -> Check:
    """Every value inside center +/- width, and the dim / 2 dim spread no larger than width."""
    width = abs(center) * half if relative else half
    spread = max(values) - min(values)
    ok = all(abs(v - center) <= width for v in values) and spread <= width
    exp = f"{center} +/- {half * 100:g}%" if relative else f"{center} +/- {half}"
    return Check(name, list(values), f"{exp}, spread {spread:.2g}", bool(ok))


def at_least(name: str, values, bound: float) -> Check:
    return Check(name, list(values), f">= {bound}", bool(all(v >= bound for v in values)))


def at_most(name: str, values, bound: float) -> Check:
    return Check(name, list(values), f"<= {bound}", bool(all(v <= bound for v in values)))


def within(name: str, values, lo: float, hi: float) -> Check:
    return Check(name, list(values), f"in [{lo}, {hi}]", bool(all(lo <= v <= hi for v in values)))


def flag(name: str, values, expected: str = "True") -> Check:
    return Check(name, list(values), expected, bool(all(values)))


def _run(number: int, title: str, dims: tuple, body: Callable[[CriterionResult], None]) -> CriterionResult:
    res = CriterionResult(number, title, dims=dims)
    t0 = time.perf_counter()
    try:
        body(res)
    except RabiGatesError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    res.runtime = time.perf_counter() - t0
    return res


# --- criteria -------------------------------------------------------------------------

def criterion_1(dim: int = 100) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        params = RabiParams(0.1)
        pts = [ex.attach_mana(ex.generation_scan(params, 0.2, 3, [1.0], d, init="exact", reduction="trace")[0])
               for d in dims]
        res.checks += [
            at_least("fidelity", [p.fidelity for p in pts], 0.98),
            band("mana", [p.mana_generated for p in pts], 0.63, 0.04),
            Check("gamma / energy (info)", [p.gamma for p in pts] + [p.energy for p in pts], "reported", True),
            Check("ideal-state mana (info)", [p.mana_target for p in pts], "reported", True),
        ]
    return _run(1, "exact-frame tri-squeezed generation at <n>=1", dims, body)


def criterion_2(dim: int = 100) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        params = RabiParams(0.1)
        pts = [ex.attach_mana(ex.generation_scan(params, 0.2, 3, [1.0], d, init="approx", reduction="trace")[0])
               for d in dims]
        res.checks += [
            band("fidelity", [p.fidelity for p in pts], 0.90, 0.03),
            band("mana", [p.mana_generated for p in pts], 0.53, 0.05),
        ]
    return _run(2, "approximate-frame tri-squeezed generation at <n>=1", dims, body)


def criterion_3(dim: int = 100) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        r_sq = math.asinh(1.0)  # sinh^2 r = 1
        for n in (3, 4):
            tails, ratios = [], []
            for d in dims:
                g = _energy_gamma(n, 1.0, d)
                tail = fock_tail(multi_squeezed(d, n, g, leakage_tol=None), 20)
                sq = QuantumState(squeeze(d, r_sq).data[:, 0], Space.fock(d))
                tails.append(tail)
                ratios.append(tail / fock_tail(sq, 20))
            res.checks.append(within(f"tail n={n}", tails, 0.005, 0.02))
            res.checks.append(at_least(f"tail ratio n={n} vs squeezed vacuum", ratios, 50.0))
    return _run(3, "Fock tails of tri/quadri-squeezed states", dims, body)


def _energy_gamma(n: int, energy: float, dim: int) -> float:
    from .gates import energy_to_gamma
    return energy_to_gamma(n, energy, dim)


def criterion_4(dim: int = 80) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        params = RabiParams(0.05)
        runs = [ex.cubic_run(params, 0.01, (100, 200, 8000), 1200, d) for d in dims]
        res.checks += [
            band("delta", [r.delta for r in runs], 8.27e-5, 0.01, relative=True),
            band("gamma_c", [r.gamma_c for r in runs], 1 / math.sqrt(32 * math.pi), 0.01, relative=True),
            at_least("fidelity", [r.fidelity for r in runs], 0.985),
            band("mana", [r.mana for r in runs], 0.14, 0.02),
            Check("block fidelity (info)", [r.block_fidelity for r in runs], "reported", True),
        ]
    return _run(4, "Trotterised cubic-phase sequence", dims, body)


def _noisy(dims, g, n, gamma, bracket):
    params = RabiParams(g)
    return [ex.noisy_run(params, 1.0, n, gamma, d, NoiseConfig.standard(), bracket=bracket) for d in dims]


def criterion_5(dim: int = 60) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        runs = _noisy(dims, 0.05, 3, 0.2, (0.0, 0.3))
        res.checks += [
            band("gamma_m", [r.gamma_m for r in runs], 0.116, 0.008),
            band("fidelity", [r.fidelity for r in runs], 0.94, 0.02),
            band("mana", [r.mana for r in runs], 0.14, 0.03),
            band("ideal mana", [r.ideal_mana for r in runs], 0.22, 0.02),
            flag("negative W at p=-1.6", [bool(r.sections["generated_p-1.6"].min() < 0) for r in runs]),
            flag("negative W at p=2", [bool(r.sections["generated_p2"].min() < 0) for r in runs]),
            at_least("min eigenvalue", [r.min_eigenvalue for r in runs], -1e-6),
            Check("duration", [r.duration for r in runs], "about 2400", True),
        ]
    return _run(5, "noisy tri-squeezed generation, g = 0.05", dims, body)


def criterion_6(dim: int = 60) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        tri = _noisy(dims, 0.1, 3, 0.2, (0.0, 0.3))
        res.checks += [
            band("tri fidelity", [r.fidelity for r in tri], 0.95, 0.02),
            band("tri gamma_m", [r.gamma_m for r in tri], 0.131, 0.008),
            band("tri mana", [r.mana for r in tri], 0.31, 0.03),
            band("tri ideal mana", [r.ideal_mana for r in tri], 0.33, 0.02),
        ]
        quad = _noisy(dims, 0.1, 4, 0.0375, (0.0, 0.06))
        res.checks += [
            band("quadri fidelity", [r.fidelity for r in quad], 0.96, 0.02),
            band("quadri gamma_m", [r.gamma_m for r in quad], 0.025, 0.005),
            band("quadri mana", [r.mana for r in quad], 0.12, 0.03),
            band("quadri ideal mana", [r.ideal_mana for r in quad], 0.15, 0.02),
        ]
    return _run(6, "noisy generation in the ultrastrong regime, g = 0.1", dims, body)


def criterion_7(dim: int = 60) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        params = RabiParams(0.1)
        two = [ex.cat_run(params, 0.25, 2, 0.5, d, mode="drive") for d in dims]
        three = [ex.cat_run(params, 0.25, 3, 0.1, d, mode="drive") for d in dims]
        res.checks += [
            band("n=2 energy", [r.energy for r in two], 0.667, 0.10, relative=True),
            band("n=2 mana", [r.mana for r in two], 0.50, 0.05),
            band("n=3 energy", [r.energy for r in three], 0.10, 0.10, relative=True),
            band("n=3 mana", [r.mana for r in three], 0.15, 0.03),
        ]
    return _run(7, "cat-like superpositions", dims, body)


# --- property suite ---------------------------------------------------------------------

def _interior_err(a: np.ndarray, b: np.ndarray, k: int) -> float:
    return float(np.abs(a[:k, :k] - b[:k, :k]).max())


def gaussian_states(dim: int, count: int = 10, seed: int = 7) -> list[QuantumState]:
    """Random displaced, squeezed and rotated vacua."""
    rng = np.random.default_rng(seed)
    out = []
    num = np.arange(dim)
    for _ in range(count):
        alpha = rng.uniform(0, 1.0) * np.exp(2j * np.pi * rng.uniform())
        r = rng.uniform(0, 0.5) * np.exp(2j * np.pi * rng.uniform())
        psi = displacement(dim, alpha).data @ (squeeze(dim, r).data @ vacuum(dim).data)
        psi = np.exp(-1j * rng.uniform(0, 2 * np.pi) * num) * psi
        out.append(QuantumState.pure(psi, Space.fock(dim), normalize=True))
    return out


def trotter_slope(dim: int = 60, tau4_periods=(800, 8000), points: int = 5) -> float:
    """Log-log slope of the single-block error against delta when tau4 is scaled."""
    params = RabiParams(0.05)
    vac = vacuum(dim).data
    ks = np.unique(np.round(np.geomspace(*tau4_periods, points)).astype(int))
    deltas, errs = [], []
    for k in ks:
        spec = CubicSpec.from_periods(params, 0.01, (100, 200, int(k)), 1)
        b = cubic_block_analytic(spec, dim).data @ vac
        g = cubic_gate(dim, spec.delta, leakage_tol=None).data @ vac
        deltas.append(spec.delta)
        errs.append(np.linalg.norm(b - g))
    return float(np.polyfit(np.log(deltas), np.log(errs), 1)[0])


def tolerance_halving(dim: int = 30, rel_tol: float = 1e-9) -> tuple[float, float]:
    """Change of fidelity and mana of a short generation run when rel_tol is halved."""
    params = RabiParams(0.1)
    out = []
    for tol in (rel_tol, rel_tol / 2):
        spec = IntegratorSpec(rel_tol=tol, abs_tol=tol / 100)
        prop = ex.nphot_propagator(params, 0.2, 3, dim, spec=spec)
        pt = ex.generation_scan(params, 0.2, 3, [0.5], dim, prop=prop, energy_ref="target")[0]
        out.append((pt.fidelity, mana(pt.state).value))
    return abs(out[0][0] - out[1][0]), abs(out[0][1] - out[1][1])


def criterion_8(dim: int = 40) -> CriterionResult:
    dims = (dim, 2 * dim)

    def body(res):
        unit, g12, rel, comm, frame, gauss = [], [], [], [], [], []
        for d in dims:
            rng = np.random.default_rng(d)
            # unitarity of constructed unitaries
            us = [displacement(d, 0.4 + 0.2j), squeeze(d, 0.3j), qubit_displacement_T(d, 0.05 + 0.2j),
                  gate_matrix(GateSpec(3, 0.1, 0.4), d, leakage_tol=None), frame_lambda(RabiParams(0.1), 2.3, d)]
            unit.append(max(float(np.abs(u.data.conj().T @ u.data - np.eye(u.shape[0])).max()) for u in us))
            # G_1 / G_2 against displacement / squeeze
            errs = []
            for _ in range(20):
                gam, phi = rng.uniform(0, 0.5), rng.uniform(0, 2 * np.pi)
                k = d // 2
                g1 = gate_matrix(GateSpec(1, gam, phi), d, leakage_tol=None).data
                g2 = gate_matrix(GateSpec(2, gam, phi), d, leakage_tol=None).data
                errs.append(_interior_err(g1, displacement(d, -1j * gam * np.exp(1j * phi)).data, k))
                errs.append(_interior_err(g2, squeeze(d, 2j * gam * np.exp(1j * phi)).data, k))
            g12.append(max(errs))
            rel.append(max(transformation_relation_errors(d, a) for a in (-0.1, 0.05 + 0.2j)))
            comm.append(commutator_identity_error(d))
            params = RabiParams(0.1)
            v = rng.normal(size=2 * d) + 1j * rng.normal(size=2 * d)
            psi = QuantumState.pure(v, Space.composite(d), normalize=True)
            back = to_nphot(to_lab(psi, 1.7, params), 1.7, params)
            frame.append(float(np.abs(back.data - psi.data).max()))
            gauss.append(max(abs(mana(s).value) for s in gaussian_states(d)))
        res.checks += [
            at_most("unitarity max|U^dag U - I|", unit, 1e-10),
            at_most("G1/G2 vs D/S interior error", g12, 1e-10),
            at_most("T relations interior error", rel, 1e-10),
            at_most("commutator identity relative error", comm, 1e-12),
            at_most("frame round trip", frame, 1e-10),
            at_most("mana of 10 Gaussian states", gauss, 5e-3),
        ]
        inv = invariant_errors()
        res.checks += [
            at_most("pure norm drift (random static H, t=100)", [inv["norm"]], 1e-8),
            at_most("energy drift / ||H||", [inv["energy"]], 1e-7),
            at_most("Lindblad trace drift", [inv["trace"]], 1e-6),
            at_least("Lindblad min eigenvalue", [inv["min_eig"]], -1e-6),
        ]
        slope = trotter_slope()
        res.checks.append(band("Trotter error slope", [slope], 1.5, 0.3))
        df, dm = tolerance_halving()
        res.checks += [at_most("fidelity change on halving rel_tol", [df], 0.02),
                       at_most("mana change on halving rel_tol", [dm], 0.02)]
    return _run(8, "property suites", dims, body)


def transformation_relation_errors(dim: int, alpha: complex) -> float:
    """Largest interior deviation of the five T(alpha) conjugation relations."""
    t = qubit_displacement_T(dim, alpha).data
    td = t.conj().T
    a = annihilation(dim).data
    ad = a.conj().T
    i2, ib = np.eye(2), np.eye(dim)
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0])
    sp = np.array([[0, 1], [0, 0]])
    d2 = displacement(dim, 2 * alpha).data
    num = ad @ a
    k = max(4, dim - int(math.ceil(8 * (abs(alpha) + 1) ** 2)) - 10)
    idx = np.concatenate([np.arange(k), dim + np.arange(k)])

    def cmp(lhs, rhs):
        return float(np.abs((lhs - rhs)[np.ix_(idx, idx)]).max())

    lhs_num = td @ np.kron(i2, num) @ t
    rhs_num = np.kron(i2, num + abs(alpha) ** 2 * ib) - np.kron(sz, a * np.conj(alpha) + ad * alpha)
    m_y = np.kron(sp, -1j * d2)
    m_z = np.kron(sp, d2)
    errs = [
        cmp(lhs_num, rhs_num),
        cmp(td @ np.kron(sx, ib) @ t, -np.kron(sz, ib)),
        cmp(td @ np.kron(sy, ib) @ t, m_y + m_y.conj().T),
        cmp(td @ np.kron(sz, ib) @ t, m_z + m_z.conj().T),
        cmp(td @ np.kron(sx, a + ad) @ t, -np.kron(sz, a + ad) + 2 * np.real(alpha) * np.eye(2 * dim)),
    ]
    return max(errs)


def commutator_identity_error(dim: int) -> float:
    spec = CubicSpec.from_periods(RabiParams(0.05), 0.01, (100, 200, 8000), 1)
    h = cubic_generators(spec, dim)

    def c(x, y):
        return x @ y - y @ x
    a = annihilation(dim).data
    x = a + a.conj().T
    lhs = c(h[1], c(h[4], h[2]))
    rhs = 8 * spec.g1 * spec.g2 * spec.g4 * (x @ x @ x)
    k = dim - 7
    return float(np.abs(lhs[:k, :k] - rhs[:k, :k]).max() / np.abs(rhs[:k, :k]).max())


def invariant_errors(dim: int = 12, seed: int = 3) -> dict:
    """Norm and energy conservation for a static H, and Lindblad trace and positivity."""
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (m + m.conj().T) / 2
    h /= np.abs(np.linalg.eigvalsh(h)).max()
    op = Operator(h, Space.fock(dim), hermitian=True)
    psi0 = QuantumState.pure(rng.normal(size=dim) + 0j, Space.fock(dim), normalize=True)
    spec = IntegratorSpec(rel_tol=1e-10, abs_tol=1e-12)
    from scipy.integrate import solve_ivp

    sol = solve_ivp(lambda t, y: -1j * (h @ y), (0, 100), psi0.data, method=spec.method,
                    rtol=spec.rel_tol, atol=spec.abs_tol)
    y = sol.y[:, -1]
    norm = abs(np.linalg.norm(y) - 1)
    psi = evolve_pure(lambda t: op, psi0, 100.0, spec)
    energy = abs(psi.expect(op) - psi0.expect(op)) / np.abs(np.linalg.eigvalsh(h)).max()
    ham = LabHamiltonian(RabiParams(0.1), tuning_for_gate("nphot", RabiParams(0.1), 0.2, n=3), 10)
    prop = PeriodPropagator(ham, IntegratorSpec(rel_tol=1e-10, abs_tol=1e-12, substeps=8))
    from .evolution import evolve_lindblad_periodic
    from .fock import plus_x, product_state
    rho0 = product_state(plus_x(), vacuum(10))
    noise = NoiseConfig(1e-3, 1e-3, 5e-4, 2.5e-4)
    rho = evolve_lindblad_periodic(prop, rho0, noise, 20)
    return {"norm": float(norm), "energy": float(energy),
            "trace": float(abs(np.trace(rho.data) - 1)),
            "min_eig": float(np.linalg.eigvalsh(rho.data).min())}


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def run_all(selected=None, log=print) -> list[CriterionResult]:
    out = []
    for k in selected or sorted(CRITERIA):
        res = CRITERIA[k]()
        log(res.report())
        out.append(res)
    return out
