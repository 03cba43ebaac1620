"""Truncated Fock-space primitives.

Operators and states carry a :class:`Space` tag so that qubit, boson and
composite objects cannot be mixed silently. The composite ordering is fixed
globally: the qubit factor comes first, ``kron(qubit, boson)``, so the
composite index is ``q * dim + m``.

Qubit conventions: ``sigma_z = |0><0| - |1><1|`` and ``sigma_+ = |0><1|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (
    CompositionError,
    InvalidDimensionError,
    NumericError,
    OutOfRangeError,
    UsageError,
)

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
PURE_NORM_TOL = 1e-9
MIXED_TRACE_TOL = 1e-7
MIXED_HERM_TOL = 1e-9
MIXED_EIG_TOL = 1e-7


@dataclass(frozen=True)
class Space:
    """Hilbert-space tag: ``boson`` is the Fock truncation, ``qubit`` flags a two-level factor."""

    boson: int | None = None
    qubit: bool = False

    def __post_init__(self):
        if self.boson is None and not self.qubit:
            raise InvalidDimensionError("empty space")
        if self.boson is not None and self.boson < 1:
            raise InvalidDimensionError(f"boson dimension {self.boson} < 1")

    @classmethod
    def fock(cls, dim: int) -> "Space":
        return cls(boson=dim)

    @classmethod
    def two_level(cls) -> "Space":
        return cls(qubit=True)

    @classmethod
    def composite(cls, dim: int) -> "Space":
        return cls(boson=dim, qubit=True)

    @property
    def dim(self) -> int:
        return (2 if self.qubit else 1) * (self.boson or 1)

    @property
    def is_composite(self) -> bool:
        return self.qubit and self.boson is not None

    @property
    def is_bosonic(self) -> bool:
        return not self.qubit and self.boson is not None

    def __str__(self):
        if self.is_composite:
            return f"qubit x boson({self.boson})"
        if self.qubit:
            return "qubit"
        return f"boson({self.boson})"


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


class Operator:
    """Dense operator on a tagged space.

    The ``hermitian`` and ``unitary`` flags are promises checked at
    construction; a broken promise raises :class:`NumericError`.
    """

    __slots__ = ("data", "space", "hermitian", "unitary")
    __array_priority__ = 1000

    def __init__(self, data, space: Space, *, hermitian: bool = False, unitary: bool = False):
        data = _frozen(data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got shape {data.shape}")
        if data.shape[0] != space.dim:
            raise InvalidDimensionError(f"shape {data.shape} does not match space {space}")
        if not np.all(np.isfinite(data)):
            raise NumericError("operator has non-finite entries")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "hermitian", bool(hermitian))
        object.__setattr__(self, "unitary", bool(unitary))
        if hermitian and hermiticity_error(data) > HERMITIAN_TOL * max(np.abs(data).max(), 1e-300):
            raise NumericError("operator flagged Hermitian is not Hermitian")
        if unitary and unitarity_error(data) > UNITARY_TOL:
            raise NumericError(f"operator flagged unitary deviates by {unitarity_error(data):.2e}")

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    def __reduce__(self):
        return (_rebuild_operator, (np.array(self.data), self.space, self.hermitian, self.unitary))

    @property
    def shape(self):
        return self.data.shape

    def full(self) -> np.ndarray:
        return self.data

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def dag(self) -> "Operator":
        return Operator(self.data.conj().T, self.space, hermitian=self.hermitian, unitary=self.unitary)

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise CompositionError(f"cannot combine {self.space} with {other.space}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.data @ other.data, self.space, unitary=self.unitary and other.unitary)
        if isinstance(other, QuantumState):
            return other.transform(self)
        return self.data @ np.asarray(other)

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.data + other.data, self.space, hermitian=self.hermitian and other.hermitian)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.data - other.data, self.space, hermitian=self.hermitian and other.hermitian)
        return NotImplemented

    def __neg__(self):
        return Operator(-self.data, self.space, hermitian=self.hermitian, unitary=self.unitary)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        real = np.imag(scalar) == 0
        return Operator(self.data * scalar, self.space, hermitian=self.hermitian and real)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return hermiticity_error(self.data) <= tol * max(np.abs(self.data).max(), 1e-300)

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return unitarity_error(self.data) <= tol

    def interior(self, k: int) -> np.ndarray:
        """Matrix restricted to boson indices ``< k`` (all qubit indices kept)."""
        return self.data[np.ix_(interior_indices(self.space, k), interior_indices(self.space, k))]

    def __repr__(self):
        flags = [f for f in ("hermitian", "unitary") if getattr(self, f)]
        return f"Operator({self.space}{', ' + ', '.join(flags) if flags else ''})"


def hermiticity_error(a: np.ndarray) -> float:
    return float(np.abs(a - a.conj().T).max())


def unitarity_error(a: np.ndarray) -> float:
    return float(np.abs(a.conj().T @ a - np.eye(a.shape[0])).max())


def interior_indices(space: Space, k: int) -> np.ndarray:
    if space.boson is None:
        return np.arange(space.dim)
    k = min(k, space.boson)
    blocks = 2 if space.qubit else 1
    return np.concatenate([q * space.boson + np.arange(k) for q in range(blocks)])


def _rebuild_operator(data, space, hermitian, unitary):
    return Operator(data, space, hermitian=hermitian, unitary=unitary)


def _rebuild_state(data, space):
    return QuantumState(data, space, check=False)


class QuantumState:
    """Pure state vector or density matrix on a tagged space."""

    __slots__ = ("data", "space")

    def __init__(self, data, space: Space, *, check: bool = True):
        data = _frozen(data)
        if data.ndim == 1:
            if data.shape[0] != space.dim:
                raise InvalidDimensionError(f"state of length {data.shape[0]} on {space}")
        elif data.ndim == 2:
            if data.shape != (space.dim, space.dim):
                raise InvalidDimensionError(f"density matrix of shape {data.shape} on {space}")
        else:
            raise InvalidDimensionError("state must be a vector or a square matrix")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "space", space)
        if check:
            self.validate()

    def __setattr__(self, name, value):
        raise AttributeError("QuantumState is immutable")

    def __reduce__(self):
        return (_rebuild_state, (np.array(self.data), self.space))

    @classmethod
    def pure(cls, vector, space: Space, *, normalize: bool = False) -> "QuantumState":
        v = np.asarray(vector, dtype=complex)
        if normalize:
            nrm = np.linalg.norm(v)
            if nrm == 0:
                raise NumericError("cannot normalise the zero vector")
            v = v / nrm
        return cls(v, space)

    @classmethod
    def mixed(cls, rho, space: Space) -> "QuantumState":
        return cls(np.asarray(rho, dtype=complex), space)

    def validate(self):
        if self.is_pure:
            drift = abs(np.linalg.norm(self.data) - 1.0)
            if drift > PURE_NORM_TOL:
                raise NumericError(f"pure state norm off by {drift:.2e}")
            return
        rho = self.data
        if abs(np.trace(rho) - 1.0) > MIXED_TRACE_TOL:
            raise NumericError(f"density matrix trace {np.trace(rho).real:.10f}")
        if hermiticity_error(rho) > MIXED_HERM_TOL:
            raise NumericError("density matrix is not Hermitian")
        low = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
        if low < -MIXED_EIG_TOL:
            raise NumericError(f"density matrix has eigenvalue {low:.2e}")

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def vector(self) -> np.ndarray:
        if not self.is_pure:
            raise UsageError("mixed state has no state vector")
        return self.data

    def dm(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_mixed(self) -> "QuantumState":
        return self if not self.is_pure else QuantumState(self.dm(), self.space, check=False)

    def populations(self) -> np.ndarray:
        """Fock-level populations (qubit summed out for composite states)."""
        if self.is_pure:
            p = np.abs(self.data) ** 2
        else:
            p = np.real(np.diag(self.data))
        if self.space.boson is None:
            return p
        return p.reshape(-1, self.space.boson).sum(axis=0)

    def expect(self, op) -> complex:
        a = op.data if isinstance(op, Operator) else np.asarray(op)
        if isinstance(op, Operator) and op.space != self.space:
            raise CompositionError(f"operator on {op.space}, state on {self.space}")
        if self.is_pure:
            return complex(np.vdot(self.data, a @ self.data))
        return complex(np.trace(a @ self.data))

    def transform(self, op: Operator) -> "QuantumState":
        """Apply ``op`` (``U psi`` or ``U rho U^dag``); no normalisation check."""
        if op.space != self.space:
            raise CompositionError(f"operator on {op.space}, state on {self.space}")
        if self.is_pure:
            return QuantumState(op.data @ self.data, self.space, check=False)
        return QuantumState(op.data @ self.data @ op.data.conj().T, self.space, check=False)

    def ptrace_qubit(self) -> "QuantumState":
        """Reduced bosonic density matrix of a composite state."""
        if not self.space.is_composite:
            raise UsageError("partial trace needs a composite state")
        d = self.space.boson
        if self.is_pure:
            m = self.data.reshape(2, d)
            rho = m.T @ m.conj()
        else:
            r = self.data.reshape(2, d, 2, d)
            rho = r[0, :, 0, :] + r[1, :, 1, :]
        return QuantumState(rho, Space.fock(d), check=False)

    def norm(self) -> float:
        if self.is_pure:
            return float(np.linalg.norm(self.data))
        return float(np.trace(self.data).real)

    def __repr__(self):
        return f"QuantumState({'pure' if self.is_pure else 'mixed'}, {self.space})"


# --- bosonic operators -----------------------------------------------------

def _require_dim(dim: int, minimum: int = 2):
    if not isinstance(dim, (int, np.integer)) or dim < minimum:
        raise InvalidDimensionError(f"dimension must be an integer >= {minimum}, got {dim!r}")


def annihilation(dim: int) -> Operator:
    _require_dim(dim)
    return Operator(np.diag(np.sqrt(np.arange(1, dim)), 1), Space.fock(dim))


def creation(dim: int) -> Operator:
    return annihilation(dim).dag()


def number(dim: int) -> Operator:
    _require_dim(dim)
    return Operator(np.diag(np.arange(dim, dtype=float)), Space.fock(dim), hermitian=True)


def identity(space: Space) -> Operator:
    return Operator(np.eye(space.dim), space, hermitian=True, unitary=True)


def position(dim: int) -> Operator:
    """Quadrature ``q = (a + a^dag)/sqrt(2)``."""
    a = annihilation(dim).data
    return Operator((a + a.conj().T) / np.sqrt(2), Space.fock(dim), hermitian=True)


def momentum(dim: int) -> Operator:
    """Quadrature ``p = i(a^dag - a)/sqrt(2)``."""
    a = annihilation(dim).data
    return Operator(1j * (a.conj().T - a) / np.sqrt(2), Space.fock(dim), hermitian=True)


def parity(dim: int) -> Operator:
    _require_dim(dim, 1)
    return Operator(np.diag((-1.0) ** np.arange(dim)), Space.fock(dim), hermitian=True, unitary=True)


# --- qubit operators -------------------------------------------------------

_QUBIT = Space.two_level()


def sigma_x() -> Operator:
    return Operator([[0, 1], [1, 0]], _QUBIT, hermitian=True, unitary=True)


def sigma_y() -> Operator:
    return Operator([[0, -1j], [1j, 0]], _QUBIT, hermitian=True, unitary=True)


def sigma_z() -> Operator:
    return Operator([[1, 0], [0, -1]], _QUBIT, hermitian=True, unitary=True)


def sigma_plus() -> Operator:
    """``|0><1|``: raises |1> to |0>."""
    return Operator([[0, 1], [0, 0]], _QUBIT)


def sigma_minus() -> Operator:
    """``|1><0|``."""
    return Operator([[0, 0], [1, 0]], _QUBIT)


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product ``qubit (x) boson``; any other ordering is refused."""
    if not (a.space == _QUBIT and b.space.is_bosonic):
        raise CompositionError(f"tensor expects (qubit, boson), got ({a.space}, {b.space})")
    return Operator(
        np.kron(a.data, b.data),
        Space.composite(b.space.boson),
        hermitian=a.hermitian and b.hermitian,
        unitary=a.unitary and b.unitary,
    )


def on_boson(op: Operator) -> Operator:
    """Lift a bosonic operator to the composite space."""
    return tensor(identity(_QUBIT), op)


def on_qubit(op: Operator, dim: int) -> Operator:
    """Lift a qubit operator to the composite space with boson truncation ``dim``."""
    return tensor(op, identity(Space.fock(dim)))


# --- exponentials ----------------------------------------------------------

def matrix_exponential(a: Operator, scale: complex = 1.0) -> Operator:
    """``exp(scale * a)``.

    Hermitian generators go through an eigendecomposition, which keeps
    ``exp(-i t H)`` unitary to machine precision; everything else uses
    scaling and squaring with Pade approximants.
    """
    data = a.data if isinstance(a, Operator) else np.asarray(a, dtype=complex)
    space = a.space if isinstance(a, Operator) else None
    if not np.all(np.isfinite(data)) or not np.isfinite(scale):
        raise NumericError("non-finite input to matrix_exponential")
    scale = complex(scale)
    hermitian = isinstance(a, Operator) and a.hermitian
    anti = False
    if hermitian:
        w, v = np.linalg.eigh((data + data.conj().T) / 2)
        out = (v * np.exp(scale * w)) @ v.conj().T
        anti = scale.real == 0
    else:
        gen = scale * data
        anti = hermiticity_error(1j * gen) <= HERMITIAN_TOL * max(np.abs(gen).max(), 1e-300)
        if anti:
            w, v = np.linalg.eigh((1j * gen + (1j * gen).conj().T) / 2)
            out = (v * np.exp(-1j * w)) @ v.conj().T
        else:
            out = linalg.expm(gen)
    if not np.all(np.isfinite(out)):
        raise NumericError("matrix exponential overflowed")
    if space is None:
        return out
    return Operator(out, space, unitary=anti, hermitian=hermitian and scale.imag == 0)


def displacement(dim: int, alpha: complex) -> Operator:
    """``D(alpha) = exp(alpha a^dag - alpha^* a)`` from the truncated generator."""
    a = annihilation(dim).data
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return matrix_exponential(Operator(gen, Space.fock(dim)))


def squeeze(dim: int, r: complex) -> Operator:
    """``S(r) = exp((r^* a^2 - r a^dag^2)/2)`` from the truncated generator."""
    _require_dim(dim, 4)
    a = annihilation(dim).data
    a2 = a @ a
    gen = (np.conj(r) * a2 - r * a2.conj().T) / 2
    return matrix_exponential(Operator(gen, Space.fock(dim)))


# --- states ----------------------------------------------------------------

def fock(dim: int, m: int) -> QuantumState:
    _require_dim(dim, 1)
    if not 0 <= m < dim:
        raise OutOfRangeError(f"Fock level {m} outside truncation {dim}")
    v = np.zeros(dim, dtype=complex)
    v[m] = 1.0
    return QuantumState(v, Space.fock(dim))


def vacuum(dim: int) -> QuantumState:
    return fock(dim, 0)


def coherent(dim: int, alpha: complex) -> QuantumState:
    """Closed-form coherent amplitudes, renormalised on the truncated space."""
    _require_dim(dim, 1)
    m = np.arange(dim)
    logfact = np.array([math.lgamma(k + 1) for k in m])
    if alpha == 0:
        v = (m == 0).astype(complex)
    else:
        v = np.exp(m * np.log(complex(alpha)) - 0.5 * logfact - abs(alpha) ** 2 / 2)
    return QuantumState.pure(v, Space.fock(dim), normalize=True)


def qubit0() -> QuantumState:
    return QuantumState([1, 0], _QUBIT)


def qubit1() -> QuantumState:
    return QuantumState([0, 1], _QUBIT)


def plus_x() -> QuantumState:
    return QuantumState(np.array([1, 1]) / np.sqrt(2), _QUBIT)


def minus_x() -> QuantumState:
    return QuantumState(np.array([1, -1]) / np.sqrt(2), _QUBIT)


QUBIT_STATES = {"qubit0": qubit0, "qubit1": qubit1, "plus_x": plus_x, "minus_x": minus_x}


def basis_states(dim: int) -> dict:
    """Constructors for the named states used throughout the package."""
    return {
        "fock": lambda m: fock(dim, m),
        "coherent": lambda alpha: coherent(dim, alpha),
        **{name: make for name, make in QUBIT_STATES.items()},
    }


def product_state(qubit: QuantumState, boson: QuantumState) -> QuantumState:
    if qubit.space != _QUBIT or not boson.space.is_bosonic:
        raise CompositionError("product_state expects (qubit, boson)")
    space = Space.composite(boson.space.boson)
    if qubit.is_pure and boson.is_pure:
        return QuantumState(np.kron(qubit.data, boson.data), space)
    return QuantumState(np.kron(qubit.dm(), boson.dm()), space)


def leakage(state: QuantumState, k: int) -> float:
    """Total population in the top ``k`` Fock levels."""
    d = state.space.boson
    if d is None:
        raise UsageError("leakage needs a bosonic factor")
    if not 0 < k < d:
        raise OutOfRangeError(f"k={k} must lie in (0, {d})")
    return float(state.populations()[d - k:].sum())


def leakage_guard_levels(dim: int) -> int:
    """Number of top levels inspected by the truncation guard (a tenth of ``dim``)."""
    return max(1, dim // 10)
