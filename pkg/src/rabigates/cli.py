"""Command-line experiment runner.

    simulate <config-file> [--accept] [--dim N] [--workers K] [--out DIR]

Each config names one experiment; results go to ``<out>/<experiment>*.csv``
with ``#`` metadata lines (resolved config, version, dim-convergence deltas,
grid adequacy, reduction mode) ahead of the header row.

Exit codes: 0 success, 2 validation error, 3 acceptance failure,
4 numeric or convergence failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .config import ExperimentConfig, load_config
from .errors import (
    BracketError,
    ConfigError,
    GridError,
    IntegrationError,
    LambDickeError,
    LeakageError,
    NumericError,
    RabiGatesError,
    TrotterRegimeError,
    UsageError,
)
from .gates import energy_to_gamma, multi_squeezed
from .metrics import grid_adequacy, wigner_points

EXIT_OK, EXIT_VALIDATION, EXIT_ACCEPT, EXIT_NUMERIC = 0, 2, 3, 4
WIGNER_CHUNKS = 8
NUMERIC_ERRORS = (IntegrationError, NumericError, GridError, LeakageError, BracketError)


class Table:
    """Named columns plus the metadata that goes in front of them."""

    def __init__(self, name: str, columns: list[str], rows: list[list]):
        self.name = name
        self.columns = columns
        self.rows = rows

    def numeric(self) -> np.ndarray:
        return np.array([[_as_float(v) for v in r] for r in self.rows], dtype=float)


def _as_float(v) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        return float("nan")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path: Path, table: Table, meta: list[tuple[str, object]]):
    lines = [f"# {k}: {_fmt(v)}" for k, v in meta]
    lines.append(",".join(table.columns))
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _pool_map(fn, items, workers: int):
    """Ordered map; results come back in input order regardless of completion order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _summary(name: str, pairs: list[tuple[str, object]]) -> Table:
    return Table(name, ["quantity", "value"], [[k, v] for k, v in pairs])


# --- experiments -------------------------------------------------------------------

def _mana_pair(args):
    point, grid = args
    return ex.attach_mana(point, grid)


def run_fig1_sweep(cfg: ExperimentConfig, workers: int) -> tuple[list[Table], dict]:
    n = cfg.get("gate.n")
    points = ex.generation_scan(cfg.params, cfg.epsilon, n, cfg.get("sweep.energies"), cfg.dim,
                                init=cfg.get("protocol.init"), reduction=cfg.get("protocol.reduction"),
                                energy_ref=cfg.get("protocol.energy_ref"),
                                prop=ex.nphot_propagator(cfg.params, cfg.epsilon, n, cfg.dim,
                                                         substeps=cfg.integrator.substeps, spec=cfg.integrator))
    points = _pool_map(_mana_pair, [(p, cfg.grid) for p in points], workers)
    cols = ["index", "energy_request", "energy", "gamma", "fidelity", "mana_generated", "mana_target",
            "target_energy", "periods", "duration", "probability", "wigner_norm_generated", "wigner_norm_target"]
    rows = [[i, p.energy_request, p.energy, p.gamma, p.fidelity, p.mana_generated, p.mana_target,
             p.target_energy, p.periods, p.duration, p.probability, p.norm_generated, p.norm_target]
            for i, p in enumerate(points)]
    _add_seconds(cfg, cols, rows, "duration")
    states = {f"generated[{i}]": p.state for i, p in enumerate(points)}
    return [Table("fig1_sweep", cols, rows)], states


def _wigner_rows(args):
    state, q, p = args
    return wigner_points(state, q, p)


def run_wigner_map(cfg: ExperimentConfig, workers: int) -> tuple[list[Table], dict]:
    n, energy = cfg.get("gate.n"), cfg.get("wigner.energy")
    if cfg.get("wigner.state") == "ideal":
        state = multi_squeezed(cfg.dim, n, energy_to_gamma(n, energy, cfg.dim), leakage_tol=None)
    else:
        state = ex.generation_scan(cfg.params, cfg.epsilon, n, [energy], cfg.dim, init=cfg.get("protocol.init"),
                                   reduction=cfg.get("protocol.reduction"),
                                   energy_ref=cfg.get("protocol.energy_ref"))[0].state
    q, p = cfg.grid.q, cfg.grid.p
    # fixed chunking so the numbers do not depend on the worker count
    chunks = np.array_split(np.arange(q.size), WIGNER_CHUNKS)
    parts = _pool_map(_wigner_rows, [(state, q[c], p) for c in chunks if c.size], workers)
    w = np.vstack(parts)
    rows = [[qi, pj, w[i, j]] for i, qi in enumerate(q) for j, pj in enumerate(p)]
    return [Table("wigner_map", ["q", "p", "W"], rows)], {"state": state}


def run_noisy_run(cfg: ExperimentConfig, workers: int) -> tuple[list[Table], dict]:
    n, gamma = cfg.get("gate.n"), cfg.get("gate.gamma")
    r = ex.noisy_run(cfg.params, cfg.epsilon, n, gamma, cfg.dim, cfg.noise, init=cfg.get("protocol.init"),
                     readout=cfg.get("protocol.readout"), substeps=cfg.integrator.substeps,
                     section_p=cfg.get("noise.sections"), grid=cfg.grid, spec=cfg.integrator)
    keys = [k for k in r.sections if k != "q"]
    rows = [[q] + [r.sections[k][i] for k in keys] for i, q in enumerate(r.sections["q"])]
    sections = Table("noisy_run_sections", ["q"] + keys, rows)
    pairs = [("gamma", r.gamma), ("periods", r.periods), ("duration", r.duration), ("gamma_m", r.gamma_m),
             ("fidelity", r.fidelity), ("mana", r.mana), ("ideal_mana", r.ideal_mana),
             ("min_eigenvalue", r.min_eigenvalue), ("trace", r.trace)]
    pairs += [(f"{r.other_readout['readout']}_readout_{k}", v) for k, v in r.other_readout.items() if k != "readout"]
    if cfg.omega_hz is not None:
        pairs.append(("duration_s", cfg.seconds(r.duration)))
    return [_summary("noisy_run", pairs), sections], {"generated": r.state}


def _spot(args):
    cfg, n, periods = args
    return ex.gate_spot_check(cfg.params, cfg.epsilon, n, 0.0, periods, cfg.get("cubic.spot_dim"))


def run_cubic_run(cfg: ExperimentConfig, workers: int) -> tuple[list[Table], dict]:
    periods, blocks = cfg.get("cubic.periods"), cfg.get("cubic.n_blocks")
    r = ex.cubic_run(cfg.params, cfg.epsilon, periods, blocks, cfg.dim, order=cfg.get("cubic.order"), grid=cfg.grid)
    pairs = [("delta", r.delta), ("gamma_c", r.gamma_c), ("block_fidelity", r.block_fidelity),
             ("fidelity", r.fidelity), ("mana", r.mana), ("target_mana", r.target_mana), ("order", r.order)]
    tables = [_summary("cubic_run", pairs)]
    if cfg.get("cubic.spot_check"):
        # one drive-level gate per species at its block duration
        jobs = [(cfg, n, k) for n, k in zip((1, 2, 4), periods)]
        fids = _pool_map(_spot, jobs, workers)
        tables.append(Table("cubic_run_spot", ["n", "periods", "fidelity"],
                            [[n, k, f] for (_, n, k), f in zip(jobs, fids)]))
    return tables, {"sequence": r.state}


def run_cat_run(cfg: ExperimentConfig, workers: int) -> tuple[list[Table], dict]:
    r = ex.cat_run(cfg.params, cfg.epsilon, cfg.get("gate.n"), cfg.get("gate.gamma"), cfg.dim,
                   mode=cfg.get("cat.mode"), grid=cfg.grid)
    pairs = [("n", r.n), ("gamma", r.gamma), ("energy", r.energy), ("mana", r.mana),
             ("probability", r.probability), ("mode", r.mode)]
    return [_summary("cat_run", pairs)], {"cat": r.state}


def run_schedule_check(cfg: ExperimentConfig, workers: int) -> tuple[list[Table], dict]:
    out = ex.schedule_check(cfg.params, cfg.epsilon, cfg.get("schedule.program"), cfg.dim,
                            conjugation=cfg.get("schedule.conjugation"), readout=cfg.get("schedule.readout"))
    pairs = list(out.items())
    if cfg.omega_hz is not None:
        pairs.append(("duration_s", cfg.seconds(out["duration"])))
    return [_summary("schedule_check", pairs)], {}


RUNNERS = {
    "fig1_sweep": run_fig1_sweep,
    "wigner_map": run_wigner_map,
    "noisy_run": run_noisy_run,
    "cubic_run": run_cubic_run,
    "cat_run": run_cat_run,
    "schedule_check": run_schedule_check,
}


def _add_seconds(cfg: ExperimentConfig, cols: list, rows: list, col: str):
    if cfg.omega_hz is None:
        return
    k = cols.index(col)
    cols.append(f"{col}_s")
    for r in rows:
        r.append(cfg.seconds(r[k]))


def convergence_deltas(base: list[Table], doubled: list[Table]) -> list[tuple[str, float]]:
    """Largest absolute change of each numeric column between dim and 2 dim."""
    out = []
    for a, b in zip(base, doubled):
        if a.columns == ["quantity", "value"]:
            for (k, v), (_, w) in zip(a.rows, b.rows):
                if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool):
                    out.append((f"{a.name}.{k}", abs(float(v) - float(w))))
            continue
        x, y = a.numeric(), b.numeric()
        if x.shape != y.shape:
            continue
        for j, c in enumerate(a.columns):
            with np.errstate(invalid="ignore"):
                d = np.nanmax(np.abs(x[:, j] - y[:, j])) if x.size else float("nan")
            out.append((f"{a.name}.{c}", float(d)))
    return out


def run(cfg: ExperimentConfig, out_dir: Path, workers: int, *, convergence: bool | None = None) -> list[Path]:
    runner = RUNNERS[cfg.experiment]
    tables, states = runner(cfg, workers)
    meta: list[tuple[str, object]] = [("version", __version__), ("experiment", cfg.experiment)]
    meta += [(f"config.{k}", _config_value(v)) for k, v in sorted(cfg.resolved().items())]
    meta.append(("reduction", _reduction_mode(cfg)))
    if convergence is None:
        convergence = cfg.convergence
    if convergence:
        doubled, _ = runner(cfg.with_dim(2 * cfg.dim), workers)
        meta += [(f"convergence.dim2.{k}", v) for k, v in convergence_deltas(tables, doubled)]
    else:
        meta.append(("convergence", "off"))
    if cfg.get("grid.adequacy"):
        for name, st in states.items():
            ext, res = grid_adequacy(st, cfg.grid)
            meta += [(f"grid_adequacy.{name}.extent_delta", ext), (f"grid_adequacy.{name}.resolution_delta", res)]
    else:
        meta.append(("grid_adequacy", "off"))
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in tables:
        path = out_dir / f"{t.name}.csv"
        write_csv(path, t, meta)
        paths.append(path)
    return paths


def _reduction_mode(cfg: ExperimentConfig) -> str:
    """How the qubit was removed before metrology."""
    exp = cfg.experiment
    if exp == "noisy_run":
        return f"trace after {cfg.get('protocol.readout')}-frame readout"
    if exp == "schedule_check":
        return cfg.get("schedule.readout")
    if exp == "cat_run":
        return "project on +x" if cfg.get("cat.mode") == "drive" else "analytic"
    if exp == "cubic_run":
        return "none (oscillator only)"
    return cfg.get("protocol.reduction")


def _config_value(v) -> str:
    if isinstance(v, tuple):
        return ";".join(_config_value(x) for x in v)
    if hasattr(v, "n") and hasattr(v, "gamma"):
        return f"{v.n}:{_fmt(v.gamma)}:{_fmt(v.phase)}:{v.branch}"
    return _fmt(v) if v is not None else "none"


def _error_line(kind: str, exc: BaseException) -> str:
    msg = str(exc).replace("\n", " ")
    return f"error kind={kind} type={type(exc).__name__} message={msg!r}"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="simulate", description="Run a driven Rabi-model experiment from a config file.")
    ap.add_argument("config", help="key = value experiment file")
    ap.add_argument("--accept", action="store_true", help="run with dim convergence, then the acceptance suite")
    ap.add_argument("--dim", type=int, help="override the Fock truncation")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker processes (default: cores)")
    ap.add_argument("--out", default=".", help="output directory")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = load_config(args.config)
        if args.dim is not None:
            cfg = cfg.with_dim(args.dim)
        paths = run(cfg, Path(args.out), args.workers, convergence=True if args.accept else None)
        for p in paths:
            print(f"wrote {p}")
        if args.accept:
            from .acceptance import run_all
            results = run_all()
            if not all(r.passed for r in results):
                print("acceptance: FAIL")
                return EXIT_ACCEPT
            print("acceptance: PASS")
    except (ConfigError, UsageError, LambDickeError, TrotterRegimeError) as exc:
        print(_error_line("validation", exc), file=sys.stderr)
        return EXIT_VALIDATION
    except NUMERIC_ERRORS as exc:
        print(_error_line("numeric", exc), file=sys.stderr)
        return EXIT_NUMERIC
    except RabiGatesError as exc:
        kind = "validation" if isinstance(exc, ValueError) else "numeric"
        print(_error_line(kind, exc), file=sys.stderr)
        return EXIT_VALIDATION if kind == "validation" else EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
