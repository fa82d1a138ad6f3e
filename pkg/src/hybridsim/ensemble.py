"""Liouville evolution of hybrid densities by the method of characteristics.

A density is represented by i.i.d. samples; each sample is carried along the
Hamiltonian flow and moments are estimated per recorded time.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .integrator import IntegratorConfig, TrajectoryRecord, integrate
from .model import HybridHamiltonianSpec, HybridState


class DensitySpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GaussianClassical:
    """Normal density over ``(q_1..q_k, p_1..p_k)``."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.ndim != 1 or mean.size % 2:
            raise DensitySpecError("mean must have length 2k")
        if cov.shape != (mean.size, mean.size):
            raise DensitySpecError(f"covariance must be {mean.size}x{mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise DensitySpecError("non-finite density parameters")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise DensitySpecError("covariance is not symmetric")
        if np.min(np.linalg.eigvalsh(cov)) < -1e-12 * max(1.0, np.max(np.abs(cov))):
            raise DensitySpecError("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def n_dof(self) -> int:
        return self.mean.size // 2


@dataclass(frozen=True, eq=False)
class DeltaClassical:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise DensitySpecError("q and p must be vectors of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n_dof(self) -> int:
        return self.q.size


@dataclass(frozen=True, eq=False)
class QuantumMixture:
    """Finite mixture of pure states; a single component is a fixed pure state."""

    weights: tuple[float, ...]
    states: tuple[np.ndarray, ...]

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        states = [np.asarray(s, dtype=complex) for s in self.states]
        if weights.ndim != 1 or weights.size != len(states) or not states:
            raise DensitySpecError("need one weight per state and at least one state")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise DensitySpecError("weights must be non-negative and sum to 1")
        if len({s.size for s in states}) != 1:
            raise DensitySpecError("mixture states have different dimensions")
        for s in states:
            if abs(np.linalg.norm(s) - 1.0) > 1e-10:
                raise DensitySpecError("mixture states must be normalized")
        object.__setattr__(self, "weights", tuple(weights))
        object.__setattr__(self, "states", tuple(states))

    @classmethod
    def pure(cls, omega) -> QuantumMixture:
        return cls((1.0,), (omega,))

    def density_matrix(self) -> np.ndarray:
        return sum(w * np.outer(s, s.conj()) for w, s in zip(self.weights, self.states))


@dataclass(frozen=True)
class HybridDensitySpec:
    classical: GaussianClassical | DeltaClassical
    quantum: QuantumMixture


def sample(density: HybridDensitySpec, n: int, seed: int = 0) -> list[HybridState]:
    """``n`` i.i.d. draws; the classical factor is drawn first, then the mixture component."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    cl = density.classical
    k = cl.n_dof
    if isinstance(cl, GaussianClassical):
        xs = rng.multivariate_normal(cl.mean, cl.covariance, size=n, method="eigh")
    else:
        xs = np.tile(np.concatenate([cl.q, cl.p]), (n, 1))
    mix = density.quantum
    if len(mix.states) == 1:
        idx = np.zeros(n, dtype=int)
    else:
        idx = rng.choice(len(mix.states), size=n, p=np.asarray(mix.weights))
    return [HybridState(x[:k], x[k:], mix.states[i]) for x, i in zip(xs, idx)]


def default_threads() -> int:
    env = os.environ.get("HYBRIDSIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def evolve_ensemble(spec: HybridHamiltonianSpec, samples: Sequence[HybridState], config: IntegratorConfig,
                    observables: Mapping[str, Callable] | Sequence[Callable] = (),
                    threads: int | None = None) -> list[TrajectoryRecord]:
    """One independent trajectory per sample, returned in sample order."""
    threads = threads or default_threads()

    def run(s: HybridState) -> TrajectoryRecord:
        return integrate(spec, s, config, observables)

    if threads == 1 or len(samples) == 1:
        return [run(s) for s in samples]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, samples))


@dataclass
class EnsembleResult:
    times: np.ndarray
    means: dict[str, np.ndarray] = field(default_factory=dict)
    stderrs: dict[str, np.ndarray] = field(default_factory=dict)
    sample_count: int = 0
    degenerate: bool = False


def _as_state_callable(f) -> Callable[[HybridState], float]:
    if hasattr(f, "evaluate"):
        return f.evaluate
    return f


def estimate_observables(trajectories: Sequence[TrajectoryRecord],
                         observables: Mapping[str, Callable]) -> EnsembleResult:
    """Per-time sample mean and standard error of each observable.

    Observables are callables on :class:`HybridState` or objects with an
    ``evaluate`` method; they are evaluated on the recorded states.
    """
    if not trajectories:
        raise ValueError("no trajectories")
    times = np.asarray(trajectories[0].times)
    for tr in trajectories[1:]:
        if len(tr.times) != times.size or not np.array_equal(np.asarray(tr.times), times):
            raise ValueError("trajectories have misaligned time grids")
    n = len(trajectories)
    result = EnsembleResult(times, sample_count=n, degenerate=n == 1)
    if n == 1:
        warnings.warn("single-sample ensemble: standard errors reported as 0", RuntimeWarning, stacklevel=2)
    for name, f in observables.items():
        g = _as_state_callable(f)
        values = np.array([[g(s) for s in tr.states] for tr in trajectories])
        # shifted by the first sample: identical samples give their common value exactly
        dev = values - values[0]
        result.means[name] = values[0] + dev.mean(axis=0)
        if n > 1:
            result.stderrs[name] = dev.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            result.stderrs[name] = np.zeros(times.size)
    return result


def estimate_observable(trajectories: Sequence[TrajectoryRecord], f, name: str = "f") -> EnsembleResult:
    return estimate_observables(trajectories, {name: f})
