"""Line-oriented ``key = value`` experiment configuration.

Keys are dotted (``noise.rate_a = 3.5e-5``); ``#`` starts a comment; each file
describes exactly one experiment. Unknown keys are rejected so that typos fail
loudly instead of silently falling back to defaults.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, RabiGatesError
from .evolution import IntegratorSpec, NoiseConfig
from .gates import GateSpec
from .hamiltonians import RabiParams
from .metrics import WignerGrid

EXPERIMENTS = ("fig1_sweep", "wigner_map", "noisy_run", "cubic_run", "cat_run", "schedule_check")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def conv(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {options}, got {t!r}")
        return t
    return conv


def _program(text: str) -> tuple[GateSpec, ...]:
    """``n:gamma[:phase[:branch]]`` items separated by ``;``."""
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        parts = [p.strip() for p in item.split(":")]
        if not 2 <= len(parts) <= 4:
            raise ValueError(f"bad gate {item!r}")
        n, gamma = int(parts[0]), float(parts[1])
        phase = float(parts[2]) if len(parts) > 2 else 0.0
        branch = parts[3] if len(parts) > 3 else "plus_x"
        out.append(GateSpec(n, gamma, phase, branch))
    if not out:
        raise ValueError("empty program")
    return tuple(out)


def _positive_expr(text: str) -> float:
    """A float, or a product such as ``2*pi*200e6``."""
    val = 1.0
    for part in text.replace(" ", "").lower().split("*"):
        val *= math.pi if part == "pi" else float(part)
    if not val > 0:
        raise ValueError("must be positive")
    return val


def _int_triple(text: str) -> tuple[int, int, int]:
    vals = [int(x) for x in text.replace(";", ",").split(",") if x.strip()]
    if len(vals) != 3:
        raise ValueError("expected three integers")
    return tuple(vals)


# key -> (converter, default); None default means required for some experiments
SCHEMA = {
    "experiment": (_choice(*EXPERIMENTS), None),
    "dim": (int, 60),
    "convergence": (_bool, False),
    "params.g": (float, 0.1),
    "params.omega": (float, 1.0),
    "drive.epsilon": (float, 0.2),
    "gate.n": (int, 3),
    "gate.gamma": (float, 0.2),
    "gate.phase": (float, 0.0),
    "sweep.energies": (_float_list, (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)),
    "protocol.init": (_choice("exact", "approx"), "exact"),
    "protocol.reduction": (_choice("trace", "project"), "trace"),
    "protocol.energy_ref": (_choice("generated", "target"), "generated"),
    "protocol.readout": (_choice("lab", "nphot"), "lab"),
    "wigner.energy": (float, 2.0),
    "wigner.state": (_choice("generated", "ideal"), "generated"),
    "noise.rate_a": (float, 0.0),
    "noise.rate_adag": (float, 0.0),
    "noise.rate_sz": (float, 0.0),
    "noise.rate_sminus": (float, 0.0),
    "noise.sections": (_float_list, (-1.6, 2.0)),
    "grid.q_min": (float, -8.0),
    "grid.q_max": (float, 8.0),
    "grid.p_min": (float, -8.0),
    "grid.p_max": (float, 8.0),
    "grid.n_q": (int, 321),
    "grid.n_p": (int, 321),
    "grid.adequacy": (_bool, False),
    "integrator.rel_tol": (float, 1e-12),
    "integrator.abs_tol": (float, 1e-13),
    "integrator.method_order": (int, 8),
    "integrator.substeps": (int, 16),
    "cubic.periods": (_int_triple, (100, 200, 8000)),
    "cubic.n_blocks": (int, 1200),
    "cubic.order": (_choice("derived", "printed"), "derived"),
    "cubic.spot_check": (_bool, False),
    "cubic.spot_dim": (int, 30),
    "cat.mode": (_choice("drive", "analytic", "analytic_identity"), "drive"),
    "schedule.program": (_program, None),
    "schedule.conjugation": (_choice("phase", "pulse"), "phase"),
    "schedule.readout": (_choice("project", "trace"), "project"),
    "units.omega_hz": (_positive_expr, None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dim: int
    params: RabiParams
    epsilon: float
    noise: NoiseConfig
    grid: WignerGrid
    integrator: IntegratorSpec
    convergence: bool = False
    values: dict = field(default_factory=dict)

    def get(self, key: str):
        return self.values[key]

    @property
    def omega_hz(self) -> float | None:
        return self.values.get("units.omega_hz")

    def seconds(self, t: float) -> float | None:
        """Duration in seconds; ``units.omega_hz`` is the angular frequency omega in rad/s."""
        w = self.omega_hz
        if w is None:
            return None
        return t / (w * self.params.omega)

    def resolved(self) -> dict:
        """Every key with its effective value, for output metadata."""
        return dict(self.values)

    def with_dim(self, dim: int) -> "ExperimentConfig":
        values = dict(self.values, dim=dim)
        return build_config(values)


def parse_text(text: str) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = SCHEMA[key][0](val)
        except (ValueError, RabiGatesError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if "experiment" not in values:
        raise ConfigError("missing required key 'experiment'")
    return values


def build_config(values: dict) -> ExperimentConfig:
    full = {k: default for k, (_, default) in SCHEMA.items()}
    full.update(values)
    if full["experiment"] == "schedule_check" and full["schedule.program"] is None:
        raise ConfigError("schedule_check needs schedule.program")
    if full["dim"] < 4:
        raise ConfigError("dim must be at least 4")
    try:
        params = RabiParams(full["params.g"], full["params.omega"])
        noise = NoiseConfig(full["noise.rate_a"], full["noise.rate_adag"], full["noise.rate_sz"],
                            full["noise.rate_sminus"])
        grid = WignerGrid(full["grid.q_min"], full["grid.q_max"], full["grid.p_min"], full["grid.p_max"],
                          full["grid.n_q"], full["grid.n_p"])
        integ = IntegratorSpec(rel_tol=full["integrator.rel_tol"], abs_tol=full["integrator.abs_tol"],
                               method_order=full["integrator.method_order"],
                               substeps=full["integrator.substeps"])
        if not full["drive.epsilon"] > 0:
            raise ConfigError("drive.epsilon must be positive")
    except ConfigError:
        raise
    except RabiGatesError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(full["experiment"], full["dim"], params, full["drive.epsilon"], noise, grid,
                            integ, full["convergence"], full)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return build_config(parse_text(text))
