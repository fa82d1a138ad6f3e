"""Full composite-space realization: truncated Fock oscillator (x) quantum subsystem.

Used as an independent check of the reduced model.  Polynomials in the
truncated position/momentum operators are built on a padded Fock space and
then cut back to ``N`` levels so every retained matrix element is exact.
Composite vectors are ordered oscillator-major: index ``n * d + a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .model import HybridHamiltonianSpec
from .potential import OscillatorParams, PolynomialPotential
from .quantum_ops import DimensionError, HermitianOperator

DEFAULT_TAIL_TOL = 1e-10


class TruncationError(ValueError):
    def __init__(self, levels: int, tail: float, suggested: int):
        super().__init__(f"Fock truncation N={levels} inadequate (tail weight {tail:.3e}); try N={suggested}")
        self.levels = levels
        self.tail = tail
        self.suggested = suggested


@dataclass(frozen=True)
class FockTruncation:
    levels: int = 64
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("need at least 2 Fock levels")


def _levels(N) -> FockTruncation:
    return N if isinstance(N, FockTruncation) else FockTruncation(int(N))


def _require_hbar(params: OscillatorParams) -> None:
    if not params.hbar > 0:
        raise ValueError("verifier requires hbar > 0")


def annihilation(M: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, M, dtype=float)), 1).astype(complex)


def position_operator(params: OscillatorParams, M: int) -> np.ndarray:
    a = annihilation(M)
    return math.sqrt(params.hbar / (2.0 * params.mass * params.omega)) * (a + a.conj().T)


def momentum_operator(params: OscillatorParams, M: int) -> np.ndarray:
    a = annihilation(M)
    return 1j * math.sqrt(params.hbar * params.mass * params.omega / 2.0) * (a.conj().T - a)


def _poly_matrix(coeffs, base: np.ndarray) -> np.ndarray:
    out = np.zeros_like(base)
    power = np.eye(base.shape[0], dtype=complex)
    for c in coeffs:
        if c != 0.0:
            out = out + c * power
        power = power @ base
    return out


def position_polynomial(V: PolynomialPotential, params: OscillatorParams, N: int) -> np.ndarray:
    """``V(q_hat)`` restricted to ``N`` levels, exact on the retained block."""
    M = N + V.degree + 1
    return _poly_matrix(V.coefficients, position_operator(params, M))[:N, :N]


def kinetic_operator(params: OscillatorParams, N: int) -> np.ndarray:
    p = momentum_operator(params, N + 2)
    return (p @ p)[:N, :N] / (2.0 * params.mass)


def tail_weight(q: float, p: float, params: OscillatorParams, levels: int) -> float:
    """Weight of a coherent state beyond ``levels`` Fock states (Poisson tail)."""
    n_mean = abs(_alpha(q, p, params)) ** 2
    return float(gammainc(levels, n_mean)) if n_mean > 0 else 0.0


def suggest_levels(q: float, p: float, params: OscillatorParams, tol: float = DEFAULT_TAIL_TOL) -> int:
    n = 2
    while tail_weight(q, p, params, n) > tol:
        n = int(math.ceil(n * 1.25)) + 1
    return n


def _alpha(q: float, p: float, params: OscillatorParams) -> complex:
    m, w, hb = params.mass, params.omega, params.hbar
    return (m * w * q + 1j * p) / math.sqrt(2.0 * m * w * hb)


def coherent_state(q: float, p: float, params: OscillatorParams, N=64) -> np.ndarray:
    """Fock amplitudes of the minimal-uncertainty state centred at ``(q, p)``, renormalized after truncation."""
    _require_hbar(params)
    trunc = _levels(N)
    tail = tail_weight(q, p, params, trunc.levels)
    if tail > trunc.tail_tol:
        raise TruncationError(trunc.levels, tail, suggest_levels(q, p, params, trunc.tail_tol))
    alpha = _alpha(q, p, params)
    n = np.arange(trunc.levels)
    if alpha == 0:
        c = np.zeros(trunc.levels, dtype=complex)
        c[0] = 1.0
        return c
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    c = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return c / np.linalg.norm(c)


def compose_constrained_state(q: float, p: float, omega, params: OscillatorParams, N=64) -> np.ndarray:
    """``|q,p> (x) |omega>``."""
    w = np.asarray(omega, dtype=complex)
    if abs(np.linalg.norm(w) - 1.0) > 1e-10:
        raise ValueError("omega must be normalized")
    return np.kron(coherent_state(q, p, params, N), w)


def reduce_composite_state(psi, q: float, p: float, params: OscillatorParams, N=64) -> np.ndarray:
    """Partial inner product ``<q,p|psi>``, a quantum-subsystem vector (not renormalized)."""
    c = coherent_state(q, p, params, N)
    psi = np.asarray(psi, dtype=complex)
    if psi.size % c.size:
        raise DimensionError("composite vector length is not a multiple of the Fock dimension")
    return c.conj() @ psi.reshape(c.size, -1)


def _reduced_moments(psi: np.ndarray, op: np.ndarray) -> float:
    """``<psi|op (x) I|psi>`` for an oscillator operator ``op``."""
    Psi = psi.reshape(op.shape[0], -1)
    return float(np.vdot(Psi, op @ Psi).real)


def fluctuation_functional(psi, params: OscillatorParams, N=64) -> float:
    """Excess of ``Var X + Var P`` over its minimum 1, in dimensionless quadratures.

    ``X = q sqrt(m Omega / hbar)``, ``P = p / sqrt(m Omega hbar)``; zero exactly
    on coherent product states.
    """
    _require_hbar(params)
    levels = _levels(N).levels
    psi = np.asarray(psi, dtype=complex)
    if psi.size % levels:
        raise DimensionError("composite vector length is not a multiple of the Fock dimension")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("composite state must be normalized")
    m, w, hb = params.mass, params.omega, params.hbar
    x = position_operator(params, levels + 2) * math.sqrt(m * w / hb)
    pp = momentum_operator(params, levels + 2) / math.sqrt(m * w * hb)
    total = 0.0
    for op in (x, pp):
        first = _reduced_moments(psi, op[:levels, :levels])
        second = _reduced_moments(psi, (op @ op)[:levels, :levels])
        total += second - first * first
    return total - 1.0


def build_composite_hamiltonian(spec: HybridHamiltonianSpec, N=64, flip_coupling: int | None = None) -> HermitianOperator:
    """Matrix of ``I (x) H0 + sum_j f_j(q_hat) (x) A_j + (p_hat^2/2m + V(q_hat)) (x) I``.

    ``flip_coupling`` negates one coupling term in this layer only (debug negative control).
    """
    if spec.n_dof != 1:
        raise NotImplementedError("full-space verifier supports one classical DOF")
    params = spec.oscillator
    _require_hbar(params)
    levels = _levels(N).levels
    d = spec.quantum_dim
    eye_osc = np.eye(levels, dtype=complex)
    H = np.kron(eye_osc, spec.H0.matrix)
    for j, c in enumerate(spec.couplings):
        f = position_polynomial(c.factors[0], params, levels)
        sign = -1.0 if flip_coupling == j else 1.0
        H = H + sign * np.kron(f, c.operator.matrix)
    osc = kinetic_operator(params, levels) + position_polynomial(spec.potential, params, levels)
    H = H + np.kron(osc, np.eye(d, dtype=complex))
    return HermitianOperator(H)


def partial_expectation(H, q: float, p: float, params: OscillatorParams, N=64) -> np.ndarray:
    """``<q,p|H|q,p>`` as a ``d x d`` operator on the quantum subsystem."""
    c = coherent_state(q, p, params, N)
    Hm = H.matrix if isinstance(H, HermitianOperator) else np.asarray(H)
    n = c.size
    d = Hm.shape[0] // n
    H4 = Hm.reshape(n, d, n, d)
    return np.einsum("i,iajb,j->ab", c.conj(), H4, c)


def build_H_alpha(H, q: float, p: float, params: OscillatorParams, N=64) -> HermitianOperator:
    """``|q,p><q,p| (x) <q,p|H|q,p>``."""
    c = coherent_state(q, p, params, N)
    h = partial_expectation(H, q, p, params, N)
    return HermitianOperator(np.kron(np.outer(c, c.conj()), h))


def commutator_vanishing_check(A1, H_alpha, psi) -> float:
    """``|<psi|[A1 (x) I, H_alpha]|psi>|``."""
    A1 = np.asarray(A1, dtype=complex)
    Ha = H_alpha.matrix if isinstance(H_alpha, HermitianOperator) else np.asarray(H_alpha)
    d = Ha.shape[0] // A1.shape[0]
    big = np.kron(A1, np.eye(d, dtype=complex))
    psi = np.asarray(psi, dtype=complex)
    return float(abs(np.vdot(psi, (big @ Ha - Ha @ big) @ psi)))


def composite_energy(H, psi) -> float:
    Hm = H.matrix if isinstance(H, HermitianOperator) else np.asarray(H)
    return float(np.vdot(psi, Hm @ psi).real)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def random_phase_points(n: int, alpha2_max: float, params: OscillatorParams, seed: int = 0):
    """``(q, p)`` pairs with ``|alpha|^2`` uniform in ``[0, alpha2_max]``."""
    rng = np.random.default_rng(seed)
    n2 = rng.uniform(0.0, alpha2_max, size=n)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    a = np.sqrt(n2) * np.exp(1j * theta)
    scale = math.sqrt(2.0 * params.mass * params.omega * params.hbar)
    return [(float(scale * z.real / (params.mass * params.omega)), float(scale * z.imag)) for z in a]


def run_verification(spec: HybridHamiltonianSpec, initial_state, N=64, n_points: int = 100,
                     alpha2_max: float = 10.0, seed: int = 0, flip_coupling: int | None = None,
                     t_short: float = 1.0) -> list[CheckResult]:
    """Cross-check the reduced model against the full composite space.

    Raises :class:`TruncationError` if any visited coherent state needs more levels.
    """
    from .integrator import IntegratorConfig, integrate
    from .model import HybridState, effective_quantum_hamiltonian, hamiltonian_value

    params = spec.oscillator
    _require_hbar(params)
    if not spec.hbar > 0:
        raise ValueError("verifier requires hbar > 0")
    trunc = _levels(N)
    levels = trunc.levels
    spec_k = spec.with_kinetic_fluctuation(True)
    H = build_composite_hamiltonian(spec, trunc, flip_coupling)
    rng = np.random.default_rng(seed + 1)
    d = spec.quantum_dim

    points = random_phase_points(n_points, alpha2_max, params, seed)
    points.append((float(initial_state.q[0]), float(initial_state.p[0])))
    e4 = e21 = comm_q = comm_p = 0.0
    qop = position_operator(params, levels)
    pop = momentum_operator(params, levels)
    for q, p in points:
        w = rng.normal(size=d) + 1j * rng.normal(size=d)
        w /= np.linalg.norm(w)
        psi = compose_constrained_state(q, p, w, params, trunc)
        reduced = hamiltonian_value(spec_k, HybridState([q], [p], w))
        e4 = max(e4, abs(composite_energy(H, psi) - reduced))
        h = partial_expectation(H, q, p, params, trunc)
        scalar = spec_k.classical_energy(np.array([q]), np.array([p]))
        heff = effective_quantum_hamiltonian(spec, [q]).matrix
        e21 = max(e21, float(np.max(np.abs(h - scalar * np.eye(d) - heff))))
        Ha = build_H_alpha(H, q, p, params, trunc)
        comm_q = max(comm_q, commutator_vanishing_check(qop, Ha, psi))
        comm_p = max(comm_p, commutator_vanishing_check(pop, Ha, psi))

    traj = integrate(spec, initial_state, IntegratorConfig("strang", 1e-2, t_short, 10))
    excess = 0.0
    for s in traj.states:
        psi = compose_constrained_state(float(s.q[0]), float(s.p[0]), s.omega / np.linalg.norm(s.omega),
                                        params, trunc)
        excess = max(excess, abs(fluctuation_functional(psi, params, trunc)))
    return [
        CheckResult("energy consistency <C|H|C> vs reduced H_t", e4, 1e-7),
        CheckResult("effective quantum Hamiltonian consistency", e21, 1e-7),
        CheckResult("commutator vanishing [q_hat, H_alpha]", comm_q, 1e-7),
        CheckResult("commutator vanishing [p_hat, H_alpha]", comm_p, 1e-7),
        CheckResult("fluctuation excess along trajectory", excess, 1e-8),
    ]
