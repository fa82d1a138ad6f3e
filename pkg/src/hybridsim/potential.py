"""Polynomial potentials and their coherent-state (Gaussian-smoothed) expectations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

MAX_DEGREE = 30


@dataclass(frozen=True, eq=False)
class PolynomialPotential:
    """``V(q) = sum_n coefficients[n] * q**n``."""

    coefficients: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        c = [float(x) for x in np.atleast_1d(np.asarray(self.coefficients, dtype=float))]
        if not all(math.isfinite(x) for x in c):
            raise ValueError("potential coefficients must be finite")
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        if len(c) - 1 > MAX_DEGREE:
            raise ValueError(f"polynomial degree {len(c) - 1} exceeds supported maximum {MAX_DEGREE}")
        object.__setattr__(self, "coefficients", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return self.coefficients == (0.0,)

    def __call__(self, q):
        return P.polyval(q, self.coefficients)

    def __eq__(self, other):
        return isinstance(other, PolynomialPotential) and self.coefficients == other.coefficients

    def __hash__(self):
        return hash(self.coefficients)

    def __add__(self, other: PolynomialPotential) -> PolynomialPotential:
        return PolynomialPotential(tuple(P.polyadd(self.coefficients, other.coefficients)))

    def __mul__(self, scalar: float) -> PolynomialPotential:
        return PolynomialPotential(tuple(float(scalar) * np.asarray(self.coefficients)))

    __rmul__ = __mul__

    def __repr__(self):
        return f"PolynomialPotential({list(self.coefficients)})"


@dataclass(frozen=True)
class OscillatorParams:
    """Mass, frequency and the hbar that sets the coherent-state width.

    ``hbar == 0`` is the macro-limit: coherent expectations collapse to ``V(q)``.
    """

    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValueError("mass must be positive")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError("omega must be positive")
        if not (math.isfinite(self.hbar) and self.hbar >= 0):
            raise ValueError("hbar must be non-negative")

    @property
    def position_variance(self) -> float:
        """Coherent-state position variance ``hbar / (2 m Omega)``."""
        return self.hbar / (2.0 * self.mass * self.omega)


def derivative(V: PolynomialPotential, n: int = 1) -> PolynomialPotential:
    if n < 0:
        raise ValueError("derivative order must be non-negative")
    if n == 0:
        return V
    if n > V.degree:
        return PolynomialPotential((0.0,))
    return PolynomialPotential(tuple(P.polyder(V.coefficients, n)))


def smoothed_potential(V: PolynomialPotential, params: OscillatorParams) -> PolynomialPotential:
    """Polynomial whose value at ``q`` is ``<q,p|V(q_hat)|q,p>``.

    Sum over ``k`` of ``(s/2)**k / k! * V^(2k)`` with ``s`` the position
    variance; terminates at ``k = deg // 2``.
    """
    half_var = 0.5 * params.position_variance
    out = np.array(V.coefficients, dtype=float)
    weight = 1.0
    for k in range(1, V.degree // 2 + 1):
        weight *= half_var / k
        dk = derivative(V, 2 * k).coefficients
        out[: len(dk)] += weight * np.asarray(dk)
    return PolynomialPotential(tuple(out))


def coherent_expectation(V: PolynomialPotential, q: float, params: OscillatorParams) -> float:
    """``<q,p|V(q_hat)|q,p>`` via the terminating derivative series."""
    half_var = 0.5 * params.position_variance
    total = float(V(q))
    weight = 1.0
    for k in range(1, V.degree // 2 + 1):
        weight *= half_var / k
        total += weight * float(derivative(V, 2 * k)(q))
    return total


def _double_factorial_odd(j: int) -> int:
    """``(j-1)!!`` for even ``j``, the ``j``-th moment of a unit normal."""
    return math.prod(range(j - 1, 0, -2)) if j > 0 else 1


def gaussian_moment_oracle(V: PolynomialPotential, q: float, variance: float) -> float:
    """``E[V(q + xi)]`` with ``xi ~ N(0, variance)``, by binomial expansion and closed moments."""
    if variance < 0:
        raise ValueError("variance must be non-negative")
    total = 0.0
    for n, a in enumerate(V.coefficients):
        if a == 0.0:
            continue
        acc = 0.0
        for j in range(0, n + 1, 2):
            acc += math.comb(n, j) * q ** (n - j) * _double_factorial_odd(j) * variance ** (j // 2)
        total += a * acc
    return total


def h_osc(q: float, p: float, V: PolynomialPotential, params: OscillatorParams,
          include_kinetic_fluctuation: bool = False) -> float:
    """Coherent-state expectation of ``p^2/2m + V(q)``.

    By default the kinetic term is the bare ``p^2/2m``; the flag adds the
    state-independent ``hbar * Omega / 4`` from ``<p_hat^2> = p^2 + hbar m Omega / 2``.
    """
    val = p * p / (2.0 * params.mass) + coherent_expectation(V, q, params)
    if include_kinetic_fluctuation:
        val += 0.25 * params.hbar * params.omega
    return val


class ClassicalPolynomial:
    """Polynomial in the classical coordinates ``(q_1..q_k, p_1..p_k)``.

    Terms map an exponent tuple of length ``2k`` (q exponents first) to a
    real coefficient.
    """

    __slots__ = ("n_dof", "terms")

    def __init__(self, n_dof: int = 1, terms: Mapping[Sequence[int], float] | None = None):
        if n_dof < 1:
            raise ValueError("n_dof must be >= 1")
        self.n_dof = n_dof
        clean: dict[tuple[int, ...], float] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 2 * n_dof or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent tuple {exps} for {n_dof} DOF")
            c = float(c)
            if not math.isfinite(c):
                raise ValueError("coefficients must be finite")
            if c != 0.0:
                clean[exps] = clean.get(exps, 0.0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    @classmethod
    def constant(cls, value: float, n_dof: int = 1) -> ClassicalPolynomial:
        return cls(n_dof, {(0,) * (2 * n_dof): value})

    @classmethod
    def q(cls, i: int = 0, n_dof: int = 1) -> ClassicalPolynomial:
        e = [0] * (2 * n_dof)
        e[i] = 1
        return cls(n_dof, {tuple(e): 1.0})

    @classmethod
    def p(cls, i: int = 0, n_dof: int = 1) -> ClassicalPolynomial:
        e = [0] * (2 * n_dof)
        e[n_dof + i] = 1
        return cls(n_dof, {tuple(e): 1.0})

    @classmethod
    def from_potential(cls, V: PolynomialPotential, i: int = 0, n_dof: int = 1) -> ClassicalPolynomial:
        terms = {}
        for n, c in enumerate(V.coefficients):
            e = [0] * (2 * n_dof)
            e[i] = n
            terms[tuple(e)] = c
        return cls(n_dof, terms)

    def depends_on_p(self) -> bool:
        return any(any(e[self.n_dof:]) for e in self.terms)

    def __call__(self, q, p) -> float:
        x = np.concatenate([np.atleast_1d(np.asarray(q, dtype=float)), np.atleast_1d(np.asarray(p, dtype=float))])
        total = 0.0
        for exps, c in self.terms.items():
            total += c * float(np.prod(x ** np.asarray(exps)))
        return total

    def partial(self, var: int) -> ClassicalPolynomial:
        """Derivative w.r.t. coordinate ``var`` (0..k-1 are q, k..2k-1 are p)."""
        out = {}
        for exps, c in self.terms.items():
            if exps[var] == 0:
                continue
            e = list(exps)
            e[var] -= 1
            out[tuple(e)] = out.get(tuple(e), 0.0) + c * exps[var]
        return ClassicalPolynomial(self.n_dof, out)

    def _coerce(self, other) -> ClassicalPolynomial:
        if isinstance(other, ClassicalPolynomial):
            if other.n_dof != self.n_dof:
                raise ValueError("DOF mismatch")
            return other
        return ClassicalPolynomial.constant(float(other), self.n_dof)

    def __add__(self, other) -> ClassicalPolynomial:
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return ClassicalPolynomial(self.n_dof, terms)

    __radd__ = __add__

    def __neg__(self) -> ClassicalPolynomial:
        return ClassicalPolynomial(self.n_dof, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> ClassicalPolynomial:
        return self + (-self._coerce(other))

    def __mul__(self, other) -> ClassicalPolynomial:
        other = self._coerce(other)
        terms: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return ClassicalPolynomial(self.n_dof, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> ClassicalPolynomial:
        out = ClassicalPolynomial.constant(1.0, self.n_dof)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return (isinstance(other, ClassicalPolynomial) and self.n_dof == other.n_dof
                and self.terms == other.terms)

    def __repr__(self):
        return f"ClassicalPolynomial(n_dof={self.n_dof}, terms={self.terms})"
