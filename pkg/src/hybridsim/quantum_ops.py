"""Finite-dimensional operator algebra for the quantum subsystem.

Operators are small dense complex matrices.  Everything here is pure and
works on immutable wrappers around numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10
IMAG_TOL = 1e-12

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class DimensionError(ValueError):
    pass


class HermiticityError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix; rejected (not repaired) if ``A != A^dagger``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionError(f"operator must be square with dim >= 1, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator has non-finite entries")
        dev = np.max(np.abs(m - m.conj().T))
        if dev > HERMITIAN_TOL:
            raise HermiticityError(f"operator is not Hermitian (max deviation {dev:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: HermitianOperator) -> HermitianOperator:
        _check_dims(self.dim, other.dim)
        return HermitianOperator(self.matrix + other.matrix)

    def __sub__(self, other: HermitianOperator) -> HermitianOperator:
        _check_dims(self.dim, other.dim)
        return HermitianOperator(self.matrix - other.matrix)

    def __mul__(self, scalar: float) -> HermitianOperator:
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise HermiticityError("only real scaling keeps an operator Hermitian")
        return HermitianOperator(float(np.real(scalar)) * self.matrix)

    __rmul__ = __mul__

    def __matmul__(self, other: HermitianOperator) -> np.ndarray:
        _check_dims(self.dim, other.dim)
        return self.matrix @ other.matrix

    def kron(self, other: HermitianOperator) -> HermitianOperator:
        return HermitianOperator(np.kron(self.matrix, other.matrix))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = other.matrix if isinstance(other, HermitianOperator) else np.asarray(other)
        return other.shape == self.matrix.shape and np.allclose(self.matrix, other, rtol=0, atol=atol)

    @classmethod
    def zeros(cls, dim: int) -> HermitianOperator:
        return cls(np.zeros((dim, dim), dtype=complex))

    @classmethod
    def identity(cls, dim: int) -> HermitianOperator:
        return cls(np.eye(dim, dtype=complex))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Amplitude vector of the quantum subsystem.

    ``normalized=False`` must be requested explicitly; such vectors are only
    meant for the quadraticity diagnostics.
    """

    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex)
        if v.ndim != 1 or v.size < 1:
            raise DimensionError(f"state must be a non-empty vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("state has non-finite amplitudes")
        if self.normalized and abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {np.linalg.norm(v):.12g})")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_unnormalized(cls, amplitudes) -> QuantumState:
        v = np.asarray(amplitudes, dtype=complex)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(v / n)


@dataclass(frozen=True, eq=False)
class CanonicalQuantumCoords:
    """Real canonical chart of the quantum sector: ``(x, y) = sqrt(2) (Re c, Im c)``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise DimensionError("x and y must be vectors of equal length")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def _check_dims(*dims: int) -> None:
    if len(set(dims)) != 1:
        raise DimensionError(f"dimension mismatch: {dims}")


def _amplitudes(state) -> np.ndarray:
    if isinstance(state, QuantumState):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


def _matrix(op) -> np.ndarray:
    if isinstance(op, HermitianOperator):
        return op.matrix
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be square, got shape {m.shape}")
    return m


def pauli(axis: str, site: int, n_sites: int) -> HermitianOperator:
    """Pauli matrix on ``site`` (1-based, site 1 is the most significant qubit)."""
    axis = axis.lower()
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unknown Pauli axis {axis!r}")
    if not 1 <= site <= n_sites:
        raise IndexError(f"site {site} out of range 1..{n_sites}")
    factors = [PAULI[axis] if s == site else PAULI["i"] for s in range(1, n_sites + 1)]
    return HermitianOperator(reduce(np.kron, factors))


def expectation(op, state) -> float:
    """``<w|A|w>`` for Hermitian ``A``.

    Plain arrays are accepted for ``state`` (possibly unnormalized, as needed by
    the bracket diagnostics); :class:`QuantumState` inputs must be normalized.
    """
    if isinstance(op, HermitianOperator):
        m = op.matrix
    else:
        m = HermitianOperator(op).matrix
    if isinstance(state, QuantumState) and not state.normalized:
        raise ValueError("expectation requires a normalized state")
    w = _amplitudes(state)
    _check_dims(m.shape[0], w.size)
    val = np.vdot(w, m @ w)
    scale = max(1.0, float(np.vdot(w, w).real)) * max(1.0, float(np.max(np.abs(m))))
    if abs(val.imag) > IMAG_TOL * scale:
        raise ArithmeticError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def commutator(a, b) -> np.ndarray:
    """``AB - BA`` (anti-Hermitian for Hermitian inputs)."""
    ma, mb = _matrix(a), _matrix(b)
    _check_dims(ma.shape[0], mb.shape[0])
    return ma @ mb - mb @ ma


def unitary_propagator(op, dt: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(-i H dt / hbar)`` by spectral decomposition."""
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    m = op.matrix if isinstance(op, HermitianOperator) else HermitianOperator(op).matrix
    return _propagator(m, dt, hbar)


def _propagator(m: np.ndarray, dt: float, hbar: float) -> np.ndarray:
    try:
        evals, evecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("eigendecomposition failed") from exc
    phases = np.exp(-1j * evals * (dt / hbar))
    return (evecs * phases) @ evecs.conj().T


def to_canonical(state) -> CanonicalQuantumCoords:
    w = _amplitudes(state)
    return CanonicalQuantumCoords(np.sqrt(2.0) * w.real, np.sqrt(2.0) * w.imag)


def from_canonical(coords: CanonicalQuantumCoords, normalized: bool = True) -> QuantumState:
    return QuantumState((coords.x + 1j * coords.y) / np.sqrt(2.0), normalized=normalized)
