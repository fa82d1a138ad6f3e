"""Fixed-step integrators for the hybrid Hamilton equations.

``strang`` is the symmetric splitting kick/drift/exact-quantum/drift/kick and
keeps ``|omega|`` exactly; ``rk4`` is the classical Runge-Kutta scheme on the
full coordinate vector and lets the norm drift as a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import HybridHamiltonianSpec, HybridState, _check_state, _gradients, _rhs, hamiltonian_value
from .quantum_ops import _propagator

METHODS = ("strang", "rk4")


class NumericalAbort(ArithmeticError):
    def __init__(self, step: int, message: str = "non-finite state encountered"):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "strang"
    dt: float = 1e-3
    t_final: float = 0.0
    output_stride: int = 1
    renormalize: bool = False
    gauge_phase: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not (math.isfinite(self.t_final) and self.t_final >= 0):
            raise ValueError("t_final must be non-negative")
        if self.t_final > 0 and self.dt > self.t_final:
            raise ValueError("dt exceeds t_final")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")
        n = self.n_steps
        if abs(n * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValueError("t_final is not an integer multiple of dt")
        if n % self.output_stride:
            raise ValueError(f"output_stride {self.output_stride} does not divide {n} steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class TrajectoryRecord:
    times: list[float] = field(default_factory=list)
    states: list[HybridState] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    observables: dict[str, list[float]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(self.observables[name])


def _check_hbar(spec: HybridHamiltonianSpec) -> None:
    if not spec.hbar > 0:
        raise ValueError("quantum sector requires hbar > 0")


def _strang(spec, q, p, w, dt, gauge_phase=False):
    m = spec.oscillator.mass
    dHdq, _ = _gradients(spec, q, p, w)
    p = p - 0.5 * dt * dHdq
    q = q + 0.5 * dt * p / m
    if gauge_phase:
        # pure phase evaluated at the midpoint; never changes observables
        dHdq, dHdp = _gradients(spec, q, p, w)
        g = 0.5 * (float(q @ dHdq) + float(p @ dHdp))
        w = w * np.exp(-1j * g * dt / spec.hbar)
    w = _propagator(spec.heff_matrix(q), dt, spec.hbar) @ w
    q = q + 0.5 * dt * p / m
    dHdq, _ = _gradients(spec, q, p, w)
    p = p - 0.5 * dt * dHdq
    return q, p, w


def _rk4(spec, q, p, w, dt, gauge_phase=False):
    k1 = _rhs(spec, q, p, w, gauge_phase)
    h = 0.5 * dt
    k2 = _rhs(spec, q + h * k1[0], p + h * k1[1], w + h * k1[2], gauge_phase)
    k3 = _rhs(spec, q + h * k2[0], p + h * k2[1], w + h * k2[2], gauge_phase)
    k4 = _rhs(spec, q + dt * k3[0], p + dt * k3[1], w + dt * k3[2], gauge_phase)
    s = dt / 6.0
    return tuple(y + s * (a + 2.0 * b + 2.0 * c + d)
                 for y, a, b, c, d in zip((q, p, w), k1, k2, k3, k4))


def step_strang(spec: HybridHamiltonianSpec, state: HybridState, dt: float,
                gauge_phase: bool = False) -> HybridState:
    """One symmetric splitting step.  Negative ``dt`` steps backwards exactly."""
    _check_state(spec, state)
    _check_hbar(spec)
    return HybridState(*_strang(spec, state.q, state.p, state.omega, dt, gauge_phase))


def step_rk4(spec: HybridHamiltonianSpec, state: HybridState, dt: float,
             gauge_phase: bool = False, renormalize: bool = False) -> HybridState:
    _check_state(spec, state)
    q, p, w = _rk4(spec, state.q, state.p, state.omega, dt, gauge_phase)
    if renormalize:
        w = w / np.linalg.norm(w)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.all(np.isfinite(w))):
        raise NumericalAbort(1)
    return HybridState.unchecked(q, p, w)


Observable = Callable[[HybridState], float]


def integrate(spec: HybridHamiltonianSpec, state0: HybridState, config: IntegratorConfig,
              observables: dict[str, Observable] | Sequence[Observable] = ()) -> TrajectoryRecord:
    """Integrate from ``t = 0`` to ``config.t_final`` recording every ``output_stride`` steps.

    ``observables`` may be a mapping name -> callable or a plain sequence
    (named ``obs0``, ``obs1``, ...).  Each is a callable on :class:`HybridState`
    or an object with an ``evaluate(state)`` method.
    """
    _check_state(spec, state0)
    _check_hbar(spec)
    if not isinstance(observables, dict):
        observables = {f"obs{i}": f for i, f in enumerate(observables)}
    observables = {name: getattr(f, "evaluate", f) for name, f in observables.items()}
    rec = TrajectoryRecord(observables={name: [] for name in observables})

    def record(step: int, state: HybridState) -> None:
        rec.times.append(step * config.dt)
        rec.states.append(state)
        rec.energies.append(hamiltonian_value(spec, state))
        rec.norms.append(state.norm)
        for name, f in observables.items():
            rec.observables[name].append(float(f(state)))

    record(0, state0)
    stepper = _strang if config.method == "strang" else _rk4
    q, p, w = state0.q, state0.p, state0.omega
    for n in range(1, config.n_steps + 1):
        # every step is checked for finiteness, so overflow warnings are redundant
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                q, p, w = stepper(spec, q, p, w, config.dt, config.gauge_phase)
            except ArithmeticError as exc:
                raise NumericalAbort(n, str(exc)) from exc
            if config.renormalize and config.method == "rk4":
                w = w / np.linalg.norm(w)
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.all(np.isfinite(w))):
                raise NumericalAbort(n)
            if n % config.output_stride == 0:
                record(n, HybridState.unchecked(q, p, w))
    return rec


@dataclass(frozen=True)
class ConservationReport:
    max_energy_drift: float
    max_norm_drift: float


def conservation_report(traj: TrajectoryRecord, eps: float = 1e-300) -> ConservationReport:
    if not len(traj):
        raise ValueError("empty trajectory")
    e = np.asarray(traj.energies)
    n = np.asarray(traj.norms)
    scale = max(abs(e[0]), eps)
    return ConservationReport(float(np.max(np.abs(e - e[0])) / scale), float(np.max(np.abs(n - 1.0))))
