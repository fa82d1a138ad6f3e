import numpy as np
import pytest

from hybridsim import HybridDensitySpec, IntegratorConfig, estimate_observable, evolve_ensemble, integrate, sample
from hybridsim.ensemble import (
    DeltaClassical,
    DensitySpecError,
    GaussianClassical,
    QuantumMixture,
    default_threads,
    estimate_observables,
)

W0 = np.array([1, 1, 1, 1j]) / 2
CFG = IntegratorConfig("strang", 0.01, 0.5, 10)


def gaussian_density(cov=((0.04, 0.01), (0.01, 0.09))):
    return HybridDensitySpec(GaussianClassical([1.0, 0.0], cov), QuantumMixture.pure(W0))


class TestDensityValidation:
    @pytest.mark.parametrize("mean, cov", [
        ([1.0], [[1.0]]),
        ([0.0, 0.0], [[1.0, 0.0], [0.5, 1.0]]),
        ([0.0, 0.0], [[-1.0, 0.0], [0.0, 1.0]]),
        ([0.0, 0.0], [[1.0, 0.0]]),
        ([np.nan, 0.0], [[1.0, 0.0], [0.0, 1.0]]),
    ])
    def test_gaussian(self, mean, cov):
        with pytest.raises(DensitySpecError):
            GaussianClassical(mean, cov)

    def test_mixture(self):
        with pytest.raises(DensitySpecError):
            QuantumMixture((0.5, 0.6), ([1, 0], [0, 1]))
        with pytest.raises(DensitySpecError):
            QuantumMixture((1.0,), ([1, 1],))
        with pytest.raises(DensitySpecError):
            QuantumMixture((0.5, 0.5), ([1, 0], [0, 0, 1]))

    def test_density_matrix(self):
        mix = QuantumMixture((0.25, 0.75), ([1, 0], [0, 1]))
        assert np.allclose(mix.density_matrix(), np.diag([0.25, 0.75]))


def test_sampling_is_seeded():
    a = sample(gaussian_density(), 10, seed=5)
    b = sample(gaussian_density(), 10, seed=5)
    c = sample(gaussian_density(), 10, seed=6)
    assert all(np.array_equal(x.q, y.q) and np.array_equal(x.p, y.p) for x, y in zip(a, b))
    assert not np.array_equal(a[0].q, c[0].q)


def test_gaussian_moments():
    cov = np.array([[0.04, 0.01], [0.01, 0.09]])
    xs = np.array([[s.q[0], s.p[0]] for s in sample(gaussian_density(cov), 40000, seed=1)])
    assert np.allclose(xs.mean(axis=0), [1.0, 0.0], atol=5 * 0.3 / np.sqrt(40000))
    assert np.allclose(np.cov(xs.T), cov, atol=3e-3)


def test_degenerate_covariance_is_allowed():
    states = sample(gaussian_density(((0.0, 0.0), (0.0, 0.0))), 5, seed=0)
    assert all(s.q[0] == 1.0 and s.p[0] == 0.0 for s in states)


def test_mixture_frequencies():
    mix = QuantumMixture((0.3, 0.7), ([1, 0, 0, 0], [0, 0, 0, 1]))
    states = sample(HybridDensitySpec(DeltaClassical([0.0], [0.0]), mix), 20000, seed=2)
    frac = np.mean([abs(s.omega[0]) == 1.0 for s in states])
    assert frac == pytest.approx(0.3, abs=0.02)


def test_threads_do_not_change_results(reference_spec, monkeypatch):
    samples = sample(gaussian_density(), 8, seed=3)
    serial = evolve_ensemble(reference_spec, samples, CFG, threads=1)
    parallel = evolve_ensemble(reference_spec, samples, CFG, threads=4)
    for a, b in zip(serial, parallel):
        assert all(np.array_equal(x.omega, y.omega) for x, y in zip(a.states, b.states))
    monkeypatch.setenv("HYBRIDSIM_THREADS", "3")
    assert default_threads() == 3


def test_delta_ensemble_equals_single_trajectory(reference_spec, reference_state):
    density = HybridDensitySpec(DeltaClassical(reference_state.q, reference_state.p), QuantumMixture.pure(reference_state.omega))
    trajs = evolve_ensemble(reference_spec, sample(density, 4, seed=0), CFG)
    single = integrate(reference_spec, reference_state, CFG)
    res = estimate_observable(trajs, lambda s: s.q[0], "q")
    assert np.array_equal(res.means["q"], [s.q[0] for s in single.states])
    assert np.all(res.stderrs["q"] == 0.0)


def test_single_sample_warns(reference_spec, reference_state):
    trajs = evolve_ensemble(reference_spec, [reference_state], CFG)
    with pytest.warns(RuntimeWarning):
        res = estimate_observable(trajs, lambda s: s.p[0])
    assert res.degenerate and np.all(res.stderrs["f"] == 0.0)


def test_misaligned_grids_rejected(reference_spec, reference_state):
    a = integrate(reference_spec, reference_state, CFG)
    b = integrate(reference_spec, reference_state, IntegratorConfig("strang", 0.01, 0.6, 10))
    with pytest.raises(ValueError, match="misaligned"):
        estimate_observables([a, b], {"q": lambda s: s.q[0]})


def test_stderr_formula(reference_spec):
    trajs = evolve_ensemble(reference_spec, sample(gaussian_density(), 16, seed=9), CFG)
    res = estimate_observable(trajs, lambda s: s.q[0], "q")
    final = np.array([t.states[-1].q[0] for t in trajs])
    assert res.means["q"][-1] == pytest.approx(final.mean())
    assert res.stderrs["q"][-1] == pytest.approx(final.std(ddof=1) / 4)
