import numpy as np
import pytest

from hybridsim import (
    CouplingTerm,
    HermitianOperator,
    HybridHamiltonianSpec,
    HybridState,
    OscillatorParams,
    PolynomialPotential,
    classical_gradients,
    effective_quantum_hamiltonian,
    eom_rhs,
    gauge_phase_term,
    hamiltonian_value,
    pauli,
    two_qubit_oscillator,
)
from hybridsim.potential import gaussian_moment_oracle
from hybridsim.quantum_ops import DimensionError

from conftest import random_unit


def closed_form_Ht(eps, mu, l1, l2, V, params, q, p, w):
    """Hamilton function of the two-qubit model written out in the (x, y) chart."""
    x, y = np.sqrt(2) * w.real, np.sqrt(2) * w.imag
    Hs = eps * (y[0]**2 + x[0]**2 - y[3]**2 - x[3]**2) + mu * (y[1]*y[2] + y[0]*y[3] + x[1]*x[2] + x[0]*x[3])
    Hint = (l1 * q * (y[0]**2 + y[1]**2 - y[2]**2 - y[3]**2 + x[0]**2 + x[1]**2 - x[2]**2 - x[3]**2) / 2
            + l2 * q * (y[0]**2 - y[1]**2 + y[2]**2 - y[3]**2 + x[0]**2 - x[1]**2 + x[2]**2 - x[3]**2) / 2)
    Hosc = p**2 / (2 * params.mass) + gaussian_moment_oracle(V, q, params.position_variance)
    return Hs + Hint + Hosc


def test_closed_form_two_qubit_oracle(rng):
    for _ in range(200):
        eps, mu, l1, l2 = rng.normal(size=4)
        params = OscillatorParams(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0, 1))
        V = PolynomialPotential(tuple(rng.normal(size=5)))
        spec = two_qubit_oscillator(eps, mu, l1, l2, V, params)
        q, p = rng.normal(size=2)
        w = random_unit(rng, 4)
        got = hamiltonian_value(spec, HybridState([q], [p], w))
        assert got == pytest.approx(closed_form_Ht(eps, mu, l1, l2, V, params, q, p, w), abs=1e-12)


def test_effective_operator_per_qubit(reference_spec):
    h = effective_quantum_hamiltonian(reference_spec, [0.7]).matrix
    sz1, sz2 = pauli("z", 1, 2).matrix, pauli("z", 2, 2).matrix
    want = sz1 + sz2 + 0.5 * pauli("x", 1, 2).matrix @ pauli("x", 2, 2).matrix + 0.7 * (0.3 * sz1 + 0.2 * sz2)
    assert np.allclose(h, want, atol=1e-15)


def test_literal_variant_moves_lambda2(reference_spec):
    literal = two_qubit_oscillator(literal_lambda2_on_first_qubit=True)
    diff = effective_quantum_hamiltonian(literal, [1.0]).matrix - effective_quantum_hamiltonian(reference_spec, [1.0]).matrix
    assert np.allclose(diff, 0.2 * (pauli("z", 1, 2).matrix - pauli("z", 2, 2).matrix))


def test_kinetic_fluctuation_flag(reference_spec, reference_state):
    shifted = reference_spec.with_kinetic_fluctuation(True)
    d = hamiltonian_value(shifted, reference_state) - hamiltonian_value(reference_spec, reference_state)
    assert d == pytest.approx(0.25)


def nonlinear_spec(rng):
    # two DOF, a quadratic coupling factor and a p-independent product coupling
    k = 2
    H0 = HermitianOperator(np.diag([0.3, -0.1, 0.5]))
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    A = HermitianOperator((a + a.conj().T) / 2)
    B = HermitianOperator(np.diag([1.0, 0.0, -1.0]))
    couplings = (
        CouplingTerm((PolynomialPotential((0.1, 0.0, 0.4)), PolynomialPotential((1.0,))), A),
        CouplingTerm((PolynomialPotential((0.0, 1.0)), PolynomialPotential((0.0, 0.5, 0.2))), B),
    )
    return HybridHamiltonianSpec(H0, couplings, PolynomialPotential((0, 0, 0.5, 0.1, 0.05)),
                                 OscillatorParams(1.2, 0.9, 0.3), n_dof=k, hbar=0.8)


def test_gradients_match_finite_differences(rng):
    spec = nonlinear_spec(rng)
    state = HybridState(rng.normal(size=2), rng.normal(size=2), random_unit(rng, 3))
    dq, dp = classical_gradients(spec, state)
    h = 1e-6
    for i in range(2):
        e = np.eye(2)[i] * h
        fq = (hamiltonian_value(spec, HybridState(state.q + e, state.p, state.omega))
              - hamiltonian_value(spec, HybridState(state.q - e, state.p, state.omega))) / (2 * h)
        fp = (hamiltonian_value(spec, HybridState(state.q, state.p + e, state.omega))
              - hamiltonian_value(spec, HybridState(state.q, state.p - e, state.omega))) / (2 * h)
        assert dq[i] == pytest.approx(fq, rel=1e-7, abs=1e-8)
        assert dp[i] == pytest.approx(fp, rel=1e-7, abs=1e-8)


def test_quantum_equation_is_hamiltonian_flow(rng):
    # dx/dt = (1/hbar) dH/dy and dy/dt = -(1/hbar) dH/dx in the chart w = (x + i y)/sqrt(2)
    spec = nonlinear_spec(rng)
    state = HybridState(rng.normal(size=2), rng.normal(size=2), random_unit(rng, 3))
    _, _, dw = eom_rhs(spec, state)
    x, y = np.sqrt(2) * state.omega.real, np.sqrt(2) * state.omega.imag

    def H(xx, yy):
        w = (xx + 1j * yy) / np.sqrt(2)
        return float(np.vdot(w, spec.heff_matrix(state.q) @ w).real)

    h = 1e-6
    for j in range(3):
        e = np.eye(3)[j] * h
        dHdx = (H(x + e, y) - H(x - e, y)) / (2 * h)
        dHdy = (H(x, y + e) - H(x, y - e)) / (2 * h)
        assert np.sqrt(2) * dw[j].real == pytest.approx(dHdy / spec.hbar, abs=1e-8)
        assert np.sqrt(2) * dw[j].imag == pytest.approx(-dHdx / spec.hbar, abs=1e-8)


def test_gauge_phase_is_a_pure_phase(reference_spec, reference_state):
    _, _, dw0 = eom_rhs(reference_spec, reference_state)
    _, _, dw1 = eom_rhs(reference_spec, reference_state, gauge_phase=True)
    g = gauge_phase_term(reference_spec, reference_state)
    assert np.allclose(dw1 - dw0, -1j * g * reference_state.omega)


def test_quantum_rhs_requires_hbar(reference_state):
    spec = two_qubit_oscillator(hbar=0.0)
    with pytest.raises(ValueError, match="hbar"):
        eom_rhs(spec, reference_state)


def test_macro_limit_drops_smoothing(reference_state):
    macro = two_qubit_oscillator(oscillator=OscillatorParams(1.0, 1.0, 0.0))
    V = macro.potential
    q = reference_state.q[0]
    assert macro.classical_energy(reference_state.q, reference_state.p) == pytest.approx(V(q))


class TestValidation:
    def test_state_norm(self):
        with pytest.raises(ValueError):
            HybridState([0.0], [0.0], [1.0, 1.0])

    def test_state_shapes(self):
        with pytest.raises(DimensionError):
            HybridState([0.0, 1.0], [0.0], [1.0])

    def test_state_finite(self):
        with pytest.raises(ValueError):
            HybridState([np.nan], [0.0], [1.0])

    def test_state_dim_vs_model(self, reference_spec):
        with pytest.raises(DimensionError):
            hamiltonian_value(reference_spec, HybridState([0.0], [0.0], [1.0, 0.0]))

    def test_coupling_dim(self):
        with pytest.raises(DimensionError):
            HybridHamiltonianSpec(pauli("z", 1, 2), (CouplingTerm(((0.0, 1.0),), pauli("z", 1, 1)),))

    def test_coupling_dof(self):
        with pytest.raises(DimensionError):
            HybridHamiltonianSpec(pauli("z", 1, 1), (CouplingTerm(((0.0, 1.0),), pauli("z", 1, 1)),), n_dof=2)

    def test_state_is_immutable(self, reference_state):
        with pytest.raises(ValueError):
            reference_state.q[0] = 2.0
