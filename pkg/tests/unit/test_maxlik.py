"""
Unit tests for binning and maximum-likelihood reconstruction
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import DimensionMismatchError, PreconditionError
from app.models.povm import Histogram
from app.models.sample import SampleBatch
from app.models.state import TwoModeDensityMatrix
from app.schemas.recon import ReconConfig
from app.schemas.run import RunConfig
from app.schemas.state import FockCutoff, ModelSpec
from app.services.fock import fidelity, make_true_state
from app.services.maxlik import (
    MONOTONE_TOL,
    bin_data,
    effective_efficiency,
    histogram_from_probabilities,
    log_likelihood,
    povm_for,
    reconstruct,
)
from app.services.sampler import sample_run


@pytest.fixture
def small_config() -> ReconConfig:
    return ReconConfig(
        n_max=2,
        eta_det=0.86,
        n_phase_bins=6,
        quad_edges=[float(v) for v in np.linspace(-4, 4, 17)],
        max_iterations=300,
    )


@pytest.fixture
def small_model() -> ModelSpec:
    return ModelSpec(eta_prep=0.64, eta_det=0.86, tau_squared=0.5, n_max=2)


class TestReconConfig:
    def test_defaults(self):
        config = ReconConfig()
        assert config.n_phase_bins == 12
        assert len(config.quad_edges) == 41
        assert config.max_iterations == 2000

    @pytest.mark.parametrize("edges", [[0.0, 0.0], [1.0, -1.0], [0.0, float("inf")]])
    def test_rejects_bad_edges(self, edges):
        with pytest.raises(ValidationError):
            ReconConfig(quad_edges=edges)


class TestBinData:
    def test_counts_preserved(self, small_config):
        rng = np.random.default_rng(0)
        n = 1000
        samples = SampleBatch(
            delta_theta=rng.uniform(0, 2 * math.pi, n),
            x_a=rng.normal(0, 3, n),
            x_b=rng.normal(0, 3, n),
        )
        hist = bin_data(samples, small_config)
        assert hist.total == n
        assert hist.counts.shape == (6, 18, 18)

    def test_tails_and_edges(self, small_config):
        samples = SampleBatch(
            delta_theta=[0.0, 2 * math.pi - 1e-12, 3.3],
            x_a=[-10.0, 10.0, 0.0],
            x_b=[-4.0, 4.0, 0.5],
        )
        counts = bin_data(samples, small_config).counts
        assert counts[0, 0, 1] == 1
        assert counts[5, 17, 17] == 1
        # a value on an edge belongs to the bin on its right
        assert counts[3, 9, 10] == 1

    def test_empty(self, small_config):
        hist = bin_data(SampleBatch.concatenate([]), small_config)
        assert hist.total == 0


class TestLogLikelihood:
    def test_empty_histogram_is_zero(self, small_config):
        povm = povm_for(small_config)
        hist = Histogram(povm=povm, counts=np.zeros(povm.shape))
        state = TwoModeDensityMatrix.vacuum(FockCutoff(n_max=2))
        assert log_likelihood(state, hist) == 0.0

    def test_true_state_beats_mixed(self, small_config, small_model):
        povm = povm_for(small_config)
        truth = make_true_state(small_model, False)
        hist = histogram_from_probabilities(povm, truth, 10000.0)
        mixed = TwoModeDensityMatrix.maximally_mixed(truth.cutoff)
        assert log_likelihood(truth, hist) > log_likelihood(mixed, hist)


class TestReconstruct:
    def test_fixed_point(self, small_config, small_model):
        """The state that generated exact counts is returned after one iteration."""
        povm = povm_for(small_config)
        truth = make_true_state(small_model, False)
        hist = histogram_from_probabilities(povm, truth, 50000.0)
        state, diag = reconstruct(hist, small_config, initial=truth)
        assert diag.converged
        assert diag.iterations == 1
        np.testing.assert_allclose(state.elements, truth.elements, atol=1e-10)

    def test_monotone_likelihood(self, small_config, small_model):
        povm = povm_for(small_config)
        hist = histogram_from_probabilities(povm, make_true_state(small_model, False), 1e4)
        config = small_config.model_copy(update={"max_iterations": 60})
        _, diag = reconstruct(hist, config)
        assert len(diag.deltas) == diag.iterations
        tol = MONOTONE_TOL * max(1.0, abs(diag.log_likelihood))
        assert all(d >= -tol for d in diag.deltas)

    def test_result_is_density_matrix(self, small_config, small_model):
        povm = povm_for(small_config)
        hist = histogram_from_probabilities(povm, make_true_state(small_model, False), 1e4)
        state, _ = reconstruct(hist, small_config.model_copy(update={"max_iterations": 30}))
        state.check()
        assert np.all(state.elements[~state.sector_mask()] == 0)

    @pytest.mark.slow
    def test_consistent_as_data_grows(self, small_config):
        config = small_config.model_copy(update={"max_iterations": 2000})
        model = ModelSpec(eta_prep=0.64, eta_det=0.86, tau_squared=0.5, n_max=2)
        truth = make_true_state(model, False)
        infidelities = []
        for n in (5_000, 50_000, 500_000):
            samples = sample_run(RunConfig(model=model, n_samples=n, rng_seed=13))
            state, _ = reconstruct(bin_data(samples, config), config)
            infidelities.append(1 - fidelity(state, truth))
        assert infidelities[2] < infidelities[0]
        assert infidelities[2] < 5e-3

    def test_threads_do_not_change_result(self, small_config, small_model):
        povm = povm_for(small_config)
        hist = histogram_from_probabilities(povm, make_true_state(small_model, False), 1e4)
        config = small_config.model_copy(update={"max_iterations": 10})
        one, _ = reconstruct(hist, config, threads=1)
        three, _ = reconstruct(hist, config, threads=3)
        np.testing.assert_array_equal(one.elements, three.elements)

    def test_recovers_true_state(self, small_config, small_model):
        povm = povm_for(small_config)
        truth = make_true_state(small_model, False)
        hist = histogram_from_probabilities(povm, truth, 1e5)
        config = small_config.model_copy(update={"max_iterations": 2000, "tol": 1e-15})
        state, _ = reconstruct(hist, config)
        assert fidelity(state, truth) > 0.98

    def test_empty_histogram(self, small_config):
        povm = povm_for(small_config)
        with pytest.raises(PreconditionError):
            reconstruct(Histogram(povm=povm, counts=np.zeros(povm.shape)), small_config)

    def test_cutoff_mismatch(self, small_config, small_model):
        povm = povm_for(small_config)
        hist = histogram_from_probabilities(povm, make_true_state(small_model, False), 100.0)
        with pytest.raises(DimensionMismatchError):
            reconstruct(hist, small_config.model_copy(update={"n_max": 3}))

    def test_not_converged_is_reported(self, small_config, small_model):
        povm = povm_for(small_config)
        hist = histogram_from_probabilities(povm, make_true_state(small_model, False), 1e4)
        _, diag = reconstruct(hist, small_config.model_copy(update={"max_iterations": 2}))
        assert not diag.converged
        assert diag.iterations == 2

    @pytest.mark.slow
    def test_simulated_run(self, experiment_model):
        samples = sample_run(RunConfig(model=experiment_model, n_samples=200_000, rng_seed=3))
        config = ReconConfig()
        state, _ = reconstruct(bin_data(samples, config), config)
        fit = effective_efficiency(state)
        assert fit.eta == pytest.approx(0.64, abs=0.02)
        assert fit.tau_squared == pytest.approx(0.5, abs=0.02)
        assert state.elements[0, 0, 0, 0].real == pytest.approx(0.36, abs=0.02)
        truth = make_true_state(experiment_model, False)
        assert fidelity(state, truth) >= 0.99

    @pytest.mark.slow
    def test_asymmetric_splitter_run(self):
        model = ModelSpec(eta_prep=0.64, eta_det=0.86, tau_squared=0.08)
        samples = sample_run(RunConfig(model=model, n_samples=200_000, rng_seed=3))
        config = ReconConfig()
        state, _ = reconstruct(bin_data(samples, config), config)
        fit = effective_efficiency(state)
        assert fit.tau_squared == pytest.approx(0.08, abs=0.01)
        assert state.elements[0, 1, 0, 1].real == pytest.approx(0.64 * 0.92, abs=0.02)
        assert fidelity(state, make_true_state(model, False)) >= 0.99
        assert np.all(state.elements[~state.sector_mask()] == 0)


class TestEffectiveEfficiency:
    @pytest.mark.parametrize("eta,tau_squared", [(0.64, 0.5), (0.64, 0.08), (1.0, 0.3)])
    def test_exact_mixture(self, eta, tau_squared):
        state = make_true_state(
            ModelSpec(eta_prep=eta, eta_det=1.0, tau_squared=tau_squared), False
        )
        fit = effective_efficiency(state)
        assert fit.eta == pytest.approx(eta, abs=1e-12)
        assert fit.tau_squared == pytest.approx(tau_squared, abs=1e-12)
        assert fit.residual < 1e-12

    def test_vacuum(self):
        fit = effective_efficiency(TwoModeDensityMatrix.vacuum(FockCutoff(n_max=5)))
        assert fit.eta == pytest.approx(0.0)
        assert fit.tau_squared == 0.0
