"""Hybrid model definition and its equations of motion.

The classical sector is ``k`` identical oscillators in coherent states,
reduced to their centres ``(q, p)``; the quantum sector is a state vector
``omega`` evolving under a ``q``-dependent Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .potential import (
    ClassicalPolynomial,
    OscillatorParams,
    PolynomialPotential,
    derivative,
    smoothed_potential,
)
from .quantum_ops import DimensionError, HermitianOperator, pauli

STATE_NORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class HybridState:
    """Point ``(q, p, omega)`` of the reduced phase space.

    User-built states must be normalized to within ``STATE_NORM_TOL``.
    Integrators build their output through :meth:`unchecked`, so the norm drift
    of a non-unitary scheme is reported rather than rejected.
    """

    q: np.ndarray
    p: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        q = np.array(np.atleast_1d(self.q), dtype=float)
        p = np.array(np.atleast_1d(self.p), dtype=float)
        w = np.array(self.omega, dtype=complex)
        if q.ndim != 1 or q.shape != p.shape:
            raise DimensionError("q and p must be vectors of equal length")
        if w.ndim != 1 or w.size < 1:
            raise DimensionError("omega must be a non-empty vector")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.all(np.isfinite(w))):
            raise ValueError("state has non-finite entries")
        if abs(np.linalg.norm(w) - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"omega is not normalized (norm {np.linalg.norm(w):.12g})")
        for name, arr in (("q", q), ("p", p), ("omega", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def unchecked(cls, q, p, omega) -> HybridState:
        """Build from finite float/complex vectors without validation (integrator output)."""
        state = object.__new__(cls)
        for name, arr in (("q", q), ("p", p), ("omega", omega)):
            arr = np.array(arr)
            arr.setflags(write=False)
            object.__setattr__(state, name, arr)
        return state

    @property
    def n_dof(self) -> int:
        return self.q.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.omega))


def _horner(coeffs_high_first, x: float) -> float:
    acc = 0.0
    for c in coeffs_high_first:
        acc = acc * x + c
    return acc


@dataclass(frozen=True, eq=False)
class CouplingTerm:
    """``f(q) * A`` with ``f(q) = prod_i factors[i](q_i)``."""

    factors: tuple[PolynomialPotential, ...]
    operator: HermitianOperator

    def __post_init__(self):
        factors = tuple(
            f if isinstance(f, PolynomialPotential) else PolynomialPotential(tuple(f))
            for f in self.factors
        )
        if not factors:
            raise ValueError("coupling needs at least one coefficient factor")
        object.__setattr__(self, "factors", factors)

    @property
    def n_dof(self) -> int:
        return len(self.factors)

    @cached_property
    def _horner(self) -> tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]:
        # (coefficients, derivative coefficients) per factor, highest power first
        return tuple((f.coefficients[::-1], derivative(f, 1).coefficients[::-1]) for f in self.factors)

    def value(self, q) -> float:
        out = 1.0
        for (c, _), qi in zip(self._horner, q):
            out *= _horner(c, qi)
        return out

    def gradient(self, q) -> np.ndarray:
        vals = [_horner(c, qi) for (c, _), qi in zip(self._horner, q)]
        grad = np.empty(len(vals))
        for i, ((_, dc), qi) in enumerate(zip(self._horner, q)):
            g = _horner(dc, qi)
            for j, v in enumerate(vals):
                if j != i:
                    g *= v
            grad[i] = g
        return grad

    def coefficient(self) -> ClassicalPolynomial:
        k = self.n_dof
        out = ClassicalPolynomial.constant(1.0, k)
        for i, f in enumerate(self.factors):
            out = out * ClassicalPolynomial.from_potential(f, i, k)
        return out


@dataclass(frozen=True, eq=False)
class HybridHamiltonianSpec:
    """Reduced Hamiltonian ``H0 + sum_j f_j(q) A_j`` plus ``k`` coherent-state oscillators.

    ``hbar`` is the quantum-sector action unit.  ``oscillator.hbar`` sets the
    coherent-state width of the classical sector and may be 0 (macro-limit).
    """

    H0: HermitianOperator
    couplings: tuple[CouplingTerm, ...] = ()
    potential: PolynomialPotential = field(default_factory=PolynomialPotential)
    oscillator: OscillatorParams = field(default_factory=OscillatorParams)
    n_dof: int = 1
    hbar: float = 1.0
    include_kinetic_fluctuation: bool = False

    def __post_init__(self):
        if not isinstance(self.H0, HermitianOperator):
            object.__setattr__(self, "H0", HermitianOperator(self.H0))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        if self.n_dof < 1:
            raise ValueError("n_dof must be >= 1")
        if not (np.isfinite(self.hbar) and self.hbar >= 0):
            raise ValueError("hbar must be non-negative")
        for c in self.couplings:
            if not isinstance(c, CouplingTerm):
                raise TypeError("couplings must be CouplingTerm instances")
            if c.operator.dim != self.H0.dim:
                raise DimensionError(
                    f"coupling operator dim {c.operator.dim} != quantum dim {self.H0.dim}")
            if c.n_dof != self.n_dof:
                raise DimensionError(f"coupling has {c.n_dof} factors, model has {self.n_dof} DOF")

    @property
    def quantum_dim(self) -> int:
        return self.H0.dim

    @cached_property
    def _smoothed(self) -> PolynomialPotential:
        return smoothed_potential(self.potential, self.oscillator)

    @cached_property
    def _smoothed_grad(self) -> tuple[float, ...]:
        return derivative(self._smoothed, 1).coefficients[::-1]

    @cached_property
    def reduced_couplings(self) -> tuple[CouplingTerm, ...]:
        """Couplings with each factor replaced by its coherent-state expectation.

        Identical to :attr:`couplings` for factors of degree <= 1 or when
        ``oscillator.hbar == 0``.
        """
        return tuple(
            CouplingTerm(tuple(smoothed_potential(f, self.oscillator) for f in c.factors), c.operator)
            for c in self.couplings
        )

    @cached_property
    def _coupling_stack(self) -> np.ndarray:
        if not self.couplings:
            return np.zeros((0, self.quantum_dim, self.quantum_dim), dtype=complex)
        return np.stack([c.operator.matrix for c in self.couplings])

    def _coupling_gradients(self, q: np.ndarray) -> np.ndarray:
        """Shape ``(n_couplings, k)``."""
        if not self.couplings:
            return np.zeros((0, self.n_dof))
        return np.stack([c.gradient(q) for c in self.reduced_couplings])

    def heff_matrix(self, q) -> np.ndarray:
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if q.size != self.n_dof:
            raise DimensionError(f"expected {self.n_dof} positions, got {q.size}")
        m = np.array(self.H0.matrix)
        if self.couplings:
            for c, a in zip(self.reduced_couplings, self._coupling_stack):
                m += c.value(q) * a
        return m

    def classical_energy(self, q: np.ndarray, p: np.ndarray) -> float:
        val = float(np.sum(p * p)) / (2.0 * self.oscillator.mass)
        val += float(np.sum(self._smoothed(q)))
        if self.include_kinetic_fluctuation:
            val += 0.25 * self.oscillator.hbar * self.oscillator.omega * self.n_dof
        return val

    def with_kinetic_fluctuation(self, flag: bool = True) -> HybridHamiltonianSpec:
        return HybridHamiltonianSpec(self.H0, self.couplings, self.potential, self.oscillator,
                                     self.n_dof, self.hbar, flag)


def _check_state(spec: HybridHamiltonianSpec, state: HybridState) -> None:
    if state.omega.size != spec.quantum_dim:
        raise DimensionError(f"omega has dim {state.omega.size}, model expects {spec.quantum_dim}")
    if state.n_dof != spec.n_dof:
        raise DimensionError(f"state has {state.n_dof} DOF, model expects {spec.n_dof}")


def _expect(m: np.ndarray, w: np.ndarray) -> float:
    return float(np.vdot(w, m @ w).real)


def effective_quantum_hamiltonian(spec: HybridHamiltonianSpec, q) -> HermitianOperator:
    """Quantum-sector Hamiltonian at classical position ``q`` (no classical scalars)."""
    return HermitianOperator(spec.heff_matrix(q))


def hamiltonian_value(spec: HybridHamiltonianSpec, state: HybridState) -> float:
    _check_state(spec, state)
    return _expect(spec.heff_matrix(state.q), state.omega) + spec.classical_energy(state.q, state.p)


def classical_gradients(spec: HybridHamiltonianSpec, state: HybridState) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ``(dH/dq, dH/dp)`` (Hellmann-Feynman for the quantum part)."""
    _check_state(spec, state)
    return _gradients(spec, state.q, state.p, state.omega)


def _gradients(spec: HybridHamiltonianSpec, q: np.ndarray, p: np.ndarray, w: np.ndarray):
    dHdq = np.array([_horner(spec._smoothed_grad, qi) for qi in q])
    if spec.couplings:
        # <w|A_j|w> for each coupling operator
        expvals = (spec._coupling_stack @ w @ w.conj()).real
        dHdq = dHdq + expvals @ spec._coupling_gradients(q)
    dHdp = p / spec.oscillator.mass
    return dHdq, dHdp


def eom_rhs(spec: HybridHamiltonianSpec, state: HybridState, gauge_phase: bool = False):
    """Time derivatives ``(dq, dp, domega)``.

    With ``gauge_phase=True`` the pure-phase term ``(q dH/dq + p dH/dp)/2`` is
    kept in the quantum equation; by default it is gauged away.
    """
    _check_state(spec, state)
    return _rhs(spec, state.q, state.p, state.omega, gauge_phase)


def _rhs(spec, q, p, w, gauge_phase=False):
    if not spec.hbar > 0:
        raise ValueError("quantum sector requires hbar > 0")
    dHdq, dHdp = _gradients(spec, q, p, w)
    h = spec.heff_matrix(q)
    dw = (-1j / spec.hbar) * (h @ w)
    if gauge_phase:
        g = 0.5 * (float(q @ dHdq) + float(p @ dHdp))
        dw = dw + (-1j / spec.hbar) * g * w
    return dHdp, -dHdq, dw


def gauge_phase_term(spec: HybridHamiltonianSpec, state: HybridState) -> float:
    dHdq, dHdp = classical_gradients(spec, state)
    return 0.5 * (float(state.q @ dHdq) + float(state.p @ dHdp))


def two_qubit_oscillator(
    epsilon: float = 1.0,
    mu: float = 0.5,
    lambda1: float = 0.3,
    lambda2: float = 0.2,
    potential: PolynomialPotential | Sequence[float] = (0.0, 0.0, 0.5, 0.0, 0.1),
    oscillator: OscillatorParams | None = None,
    hbar: float = 1.0,
    literal_lambda2_on_first_qubit: bool = False,
) -> HybridHamiltonianSpec:
    """Two qubits with ``eps (sz1 + sz2) + mu sx1 sx2``, both coupled linearly in ``q`` to one oscillator.

    ``literal_lambda2_on_first_qubit`` attaches ``lambda2`` to qubit 1 instead
    of qubit 2, reproducing a misprinted variant of the effective operator.
    """
    if not isinstance(potential, PolynomialPotential):
        potential = PolynomialPotential(tuple(potential))
    if oscillator is None:
        oscillator = OscillatorParams(1.0, 1.0, hbar)
    sz1, sz2 = pauli("z", 1, 2), pauli("z", 2, 2)
    H0 = epsilon * sz1 + epsilon * sz2 + HermitianOperator(mu * (pauli("x", 1, 2) @ pauli("x", 2, 2)))
    linear = PolynomialPotential((0.0, 1.0))
    couplings = (
        CouplingTerm((lambda1 * linear,), sz1),
        CouplingTerm((lambda2 * linear,), sz1 if literal_lambda2_on_first_qubit else sz2),
    )
    return HybridHamiltonianSpec(H0, couplings, potential, oscillator, 1, hbar)
