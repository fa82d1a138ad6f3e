"""Poisson bracket on the reduced hybrid phase space.

State functions are callables ``f(q, p, omega)``; ``omega`` may be
unnormalized, every observable here is extended off the unit sphere by its
defining formula.  :class:`HybridObservable` is the class of functions
``sum_j c_j(q, p) <omega|A_j|omega> + c_0(q, p)``.  Brackets of two such
observables are returned as plain evaluators because the class is not closed
under the bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import HybridHamiltonianSpec, HybridState
from .potential import ClassicalPolynomial, smoothed_potential
from .quantum_ops import DimensionError, HermitianOperator

StateFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], float]

DEFAULT_STEP = 1e-5


def _unpack(state) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(state, HybridState):
        return state.q, state.p, state.omega
    q, p, w = state
    return (np.atleast_1d(np.asarray(q, dtype=float)), np.atleast_1d(np.asarray(p, dtype=float)),
            np.asarray(w, dtype=complex))


def _quad(m: np.ndarray, w: np.ndarray) -> float:
    return float(np.vdot(w, m @ w).real)


class HybridObservable:
    """``sum_j c_j(q,p) <w|A_j|w> + classical_part(q,p)``."""

    def __init__(self, terms: Sequence[tuple[ClassicalPolynomial, HermitianOperator]] = (),
                 classical_part: ClassicalPolynomial | None = None, n_dof: int | None = None):
        terms = [(c if isinstance(c, ClassicalPolynomial) else ClassicalPolynomial.constant(c, n_dof or 1),
                  a if isinstance(a, HermitianOperator) else HermitianOperator(a)) for c, a in terms]
        dofs = {c.n_dof for c, _ in terms}
        if classical_part is not None:
            dofs.add(classical_part.n_dof)
        if n_dof is not None:
            dofs.add(n_dof)
        if len(dofs) > 1:
            raise DimensionError(f"inconsistent classical DOF counts {dofs}")
        self.n_dof = dofs.pop() if dofs else 1
        if len({a.dim for _, a in terms}) > 1:
            raise DimensionError("operator dimensions differ between terms")
        self.terms = tuple(terms)
        self.classical_part = classical_part if classical_part is not None else ClassicalPolynomial(self.n_dof)

    @classmethod
    def expectation(cls, op, coefficient: ClassicalPolynomial | float = 1.0, n_dof: int = 1) -> HybridObservable:
        return cls([(coefficient, op)], n_dof=n_dof)

    @classmethod
    def classical(cls, poly: ClassicalPolynomial) -> HybridObservable:
        return cls([], poly)

    @property
    def quantum_dim(self) -> int | None:
        return self.terms[0][1].dim if self.terms else None

    def __call__(self, q, p, w) -> float:
        q = np.atleast_1d(q)
        p = np.atleast_1d(p)
        w = np.asarray(w)
        if self.terms and w.size != self.quantum_dim:
            raise DimensionError(f"omega has dim {w.size}, observable expects {self.quantum_dim}")
        total = self.classical_part(q, p)
        for c, a in self.terms:
            total += c(q, p) * _quad(a.matrix, w)
        return total

    def evaluate(self, state: HybridState) -> float:
        return self(state.q, state.p, state.omega)

    def __add__(self, other: HybridObservable) -> HybridObservable:
        return HybridObservable(self.terms + other.terms, self.classical_part + other.classical_part)

    def __mul__(self, scalar: float) -> HybridObservable:
        s = float(scalar)
        return HybridObservable([(c * s, a) for c, a in self.terms], self.classical_part * s)

    __rmul__ = __mul__

    def __neg__(self) -> HybridObservable:
        return self * -1.0

    def partial(self, var: int) -> HybridObservable:
        """Derivative w.r.t. classical coordinate ``var`` (q's first, then p's)."""
        return HybridObservable([(c.partial(var), a) for c, a in self.terms],
                                self.classical_part.partial(var), n_dof=self.n_dof)


def hamiltonian_observable(spec: HybridHamiltonianSpec) -> HybridObservable:
    """The reduced Hamilton function written as a :class:`HybridObservable`."""
    k = spec.n_dof
    terms = [(ClassicalPolynomial.constant(1.0, k), spec.H0)]
    terms += [(c.coefficient(), c.operator) for c in spec.reduced_couplings]
    smooth = smoothed_potential(spec.potential, spec.oscillator)
    classical = ClassicalPolynomial(k)
    for i in range(k):
        classical = classical + ClassicalPolynomial.p(i, k) ** 2 * (0.5 / spec.oscillator.mass)
        classical = classical + ClassicalPolynomial.from_potential(smooth, i, k)
    if spec.include_kinetic_fluctuation:
        classical = classical + 0.25 * spec.oscillator.hbar * spec.oscillator.omega * k
    return HybridObservable(terms, classical)


def _check_compatible(f1: HybridObservable, f2: HybridObservable) -> None:
    if f1.n_dof != f2.n_dof:
        raise DimensionError("observables have different classical DOF counts")
    if f1.quantum_dim is not None and f2.quantum_dim is not None and f1.quantum_dim != f2.quantum_dim:
        raise DimensionError("observables have different quantum dimensions")


@dataclass(frozen=True)
class BracketEvaluator:
    """Closed-form ``{f1, f2}`` as a general state function."""

    f1: HybridObservable
    f2: HybridObservable
    hbar: float = 1.0

    def __call__(self, q, p, w) -> float:
        q, p, w = _unpack((q, p, w))
        k = self.f1.n_dof
        total = 0.0
        for i in range(k):
            total += (self.f1.partial(i)(q, p, w) * self.f2.partial(k + i)(q, p, w)
                      - self.f2.partial(i)(q, p, w) * self.f1.partial(k + i)(q, p, w))
        # (1/i hbar) <[A, B]> = (2/hbar) Im <w|AB|w>
        for c1, a1 in self.f1.terms:
            for c2, a2 in self.f2.terms:
                weight = c1(q, p) * c2(q, p)
                if weight:
                    total += weight * 2.0 / self.hbar * float(np.vdot(w, a1.matrix @ (a2.matrix @ w)).imag)
        return total

    def evaluate(self, state: HybridState) -> float:
        return self(state.q, state.p, state.omega)


def bracket_analytic(f1: HybridObservable, f2: HybridObservable, hbar: float = 1.0) -> BracketEvaluator:
    _check_compatible(f1, f2)
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    return BracketEvaluator(f1, f2, hbar)


def _gradient(f: StateFunction, q, p, w, h: float) -> np.ndarray:
    """Central-difference gradient in the real chart ``(q, p, x, y)``, ``w = (x + i y)/sqrt(2)``."""
    k, d = q.size, w.size
    z = np.concatenate([q, p, np.sqrt(2.0) * w.real, np.sqrt(2.0) * w.imag])

    def at(zz):
        return f(zz[:k], zz[k:2 * k], (zz[2 * k:2 * k + d] + 1j * zz[2 * k + d:]) / np.sqrt(2.0))

    g = np.empty(z.size)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (at(zp) - at(zm)) / (2.0 * h)
    return g


def numeric_bracket_function(f1: StateFunction, f2: StateFunction, h: float = DEFAULT_STEP,
                             hbar: float = 1.0) -> StateFunction:
    """``{f1, f2}`` by central differences, as a state function (nestable)."""
    if not 0 < h <= 1e-3:
        raise ValueError("finite-difference step must lie in (0, 1e-3]")

    def bracket(q, p, w) -> float:
        q, p, w = _unpack((q, p, w))
        k, d = q.size, w.size
        g1 = _gradient(f1, q, p, w, h)
        g2 = _gradient(f2, q, p, w, h)
        classical = g1[:k] @ g2[k:2 * k] - g2[:k] @ g1[k:2 * k]
        xs, ys = slice(2 * k, 2 * k + d), slice(2 * k + d, 2 * k + 2 * d)
        quantum = (g1[xs] @ g2[ys] - g1[ys] @ g2[xs]) / hbar
        return float(classical + quantum)

    return bracket


def bracket_numeric(f1: StateFunction, f2: StateFunction, state, h: float = DEFAULT_STEP,
                    hbar: float = 1.0) -> float:
    """Central-difference bracket at ``state`` (a HybridState or a ``(q, p, omega)`` tuple)."""
    return numeric_bracket_function(f1, f2, h, hbar)(*_unpack(state))


def richardson(value: Callable[[float], float], h: float, order: int = 2) -> float:
    """Eliminate the leading ``h**order`` error term using steps ``h`` and ``h/2``."""
    r = 2.0 ** order
    return (r * value(0.5 * h) - value(h)) / (r - 1.0)


@dataclass(frozen=True)
class QuadraticityResult:
    quadratic: bool
    max_violation: float
    witness: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def label(self) -> str:
        return "quadratic" if self.quadratic else "not_quadratic"


def homogenized(g: StateFunction) -> StateFunction:
    """``|w|^2 g(q, p, w/|w|)``: the degree-2 homogeneous extension of ``g`` off the unit sphere.

    A function on normalized states is an expectation value ``<w|C|w>`` iff
    this extension is a quadratic form; constants map to ``c |w|^2``.
    """
    def ext(q, p, w) -> float:
        n2 = float(np.vdot(w, w).real)
        if n2 == 0.0:
            return 0.0
        return n2 * g(q, p, w / np.sqrt(n2))

    return ext


def parallelogram_defect(g: StateFunction, q, p, w1, w2) -> tuple[float, float]:
    """``g(w1+w2) + g(w1-w2) - 2 g(w1) - 2 g(w2)`` and the magnitude scale of the four values."""
    vals = [g(q, p, w1 + w2), g(q, p, w1 - w2), g(q, p, w1), g(q, p, w2)]
    defect = vals[0] + vals[1] - 2.0 * vals[2] - 2.0 * vals[3]
    return defect, max(abs(v) for v in vals)


def quadraticity_test(g: StateFunction, quantum_dim: int, samples: int = 64, seed: int = 0,
                      classical_point: tuple | None = None, n_dof: int = 1,
                      tol: float = 1e-8, homogenize: bool = True) -> QuadraticityResult:
    """Test whether ``g`` is a quadratic form in ``omega`` at a fixed classical point.

    Uses the parallelogram identity on random unnormalized complex pairs and
    returns the first violating pair as the witness.  With ``homogenize`` the
    test runs on :func:`homogenized` ``g`` (whether ``g`` restricted to unit
    vectors is an expectation value); otherwise on ``g``'s own formula.
    """
    rng = np.random.default_rng(seed)
    if classical_point is None:
        q, p = rng.normal(size=n_dof), rng.normal(size=n_dof)
    else:
        q, p = (np.atleast_1d(np.asarray(x, dtype=float)) for x in classical_point)
    h = homogenized(g) if homogenize else g
    worst = 0.0
    for _ in range(samples):
        w1 = rng.normal(size=quantum_dim) + 1j * rng.normal(size=quantum_dim)
        w2 = rng.normal(size=quantum_dim) + 1j * rng.normal(size=quantum_dim)
        defect, scale = parallelogram_defect(h, q, p, w1, w2)
        worst = max(worst, abs(defect))
        if abs(defect) > tol * scale:
            return QuadraticityResult(False, abs(defect), (w1, w2))
    return QuadraticityResult(True, worst)
