"""Hybrid quantum-classical dynamics on the coherent-state constrained manifold."""

from .bracket import (
    HybridObservable,
    bracket_analytic,
    bracket_numeric,
    hamiltonian_observable,
    quadraticity_test,
)
from .ensemble import HybridDensitySpec, estimate_observable, evolve_ensemble, sample
from .integrator import IntegratorConfig, TrajectoryRecord, conservation_report, integrate, step_rk4, step_strang
from .model import (
    CouplingTerm,
    HybridHamiltonianSpec,
    HybridState,
    classical_gradients,
    effective_quantum_hamiltonian,
    eom_rhs,
    gauge_phase_term,
    hamiltonian_value,
    two_qubit_oscillator,
)
from .potential import ClassicalPolynomial, OscillatorParams, PolynomialPotential
from .quantum_ops import HermitianOperator, QuantumState, expectation, pauli, unitary_propagator

__version__ = "0.1.0"
