"""
Unit tests for Fock-space states and channels
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import (
    DimensionMismatchError,
    NumericalConsistencyError,
    ParameterError,
    TruncationError,
)
from app.models.state import SingleModeDensityMatrix, TwoModeDensityMatrix
from app.schemas.state import BeamSplitterSpec, FockCutoff, ModelSpec
from app.services.fock import (
    apply_beam_splitter,
    apply_loss,
    beam_splitter_unitary,
    fidelity,
    make_input_state,
    make_true_state,
    phase_average,
    tensor_product,
    vacuum_single,
)


def random_state(cutoff: FockCutoff, rng: np.random.Generator, rank: int = 3):
    d2 = cutoff.two_mode_dim
    g = rng.normal(size=(d2, rank)) + 1j * rng.normal(size=(d2, rank))
    m = g @ g.conj().T
    return TwoModeDensityMatrix.from_matrix(cutoff, m / np.trace(m).real)


def ket(cutoff: FockCutoff, k: int, l: int) -> np.ndarray:
    v = np.zeros(cutoff.two_mode_dim, dtype=complex)
    v[k * cutoff.dim + l] = 1.0
    return v


def pure(cutoff: FockCutoff, v: np.ndarray) -> TwoModeDensityMatrix:
    return TwoModeDensityMatrix.from_matrix(cutoff, np.outer(v, v.conj()))


class TestSchemas:
    def test_cutoff_dimensions(self):
        c = FockCutoff(n_max=5)
        assert c.dim == 6
        assert c.two_mode_dim == 36

    def test_cutoff_rejects_zero(self):
        with pytest.raises(ValidationError):
            FockCutoff(n_max=0)

    def test_beam_splitter_requires_unitarity(self):
        with pytest.raises(ValidationError):
            BeamSplitterSpec(tau=0.8, rho=0.8)

    def test_model_round_trip(self):
        model = ModelSpec(eta_prep=0.64, eta_det=0.86, tau_squared=0.08, n_max=5)
        assert ModelSpec.model_validate_json(model.model_dump_json()) == model
        assert set(model.model_dump()) == {"eta_prep", "eta_det", "tau_squared", "n_max"}

    @pytest.mark.parametrize(
        "field,value",
        [("eta_prep", 1.2), ("eta_det", 0.0), ("tau_squared", -0.1), ("tau_squared", 1.5)],
    )
    def test_model_rejects_out_of_range(self, field, value):
        with pytest.raises(ValidationError) as exc_info:
            ModelSpec(**{field: value})
        assert exc_info.value.errors()[0]["loc"] == (field,)


class TestInputState:
    def test_pure_single_photon(self, cutoff):
        rho = make_input_state(1.0, cutoff).elements
        assert rho[1, 1] == 1.0
        assert np.count_nonzero(rho) == 1

    def test_vacuum(self, cutoff):
        rho = make_input_state(0.0, cutoff).elements
        assert rho[0, 0] == 1.0
        assert np.count_nonzero(rho) == 1

    def test_mixture(self, cutoff):
        rho = make_input_state(0.64, cutoff).elements
        np.testing.assert_allclose(np.diag(rho).real, [0.36, 0.64, 0, 0, 0, 0])

    @pytest.mark.parametrize("eta", [-0.01, 1.01])
    def test_out_of_range(self, cutoff, eta):
        with pytest.raises(ParameterError):
            make_input_state(eta, cutoff)


class TestBeamSplitter:
    def test_transparent_is_identity(self, cutoff):
        u = beam_splitter_unitary(BeamSplitterSpec(tau=1.0, rho=0.0), cutoff).matrix
        np.testing.assert_allclose(u, np.eye(cutoff.two_mode_dim), atol=1e-15)

    @pytest.mark.parametrize("tau_squared", [0.5, 0.08])
    def test_single_photon_convention(self, cutoff, tau_squared):
        bs = BeamSplitterSpec.from_transmission(tau_squared)
        u = beam_splitter_unitary(bs, cutoff).matrix
        out = u @ ket(cutoff, 1, 0)
        expected = math.sqrt(tau_squared) * ket(cutoff, 1, 0) - math.sqrt(
            1 - tau_squared
        ) * ket(cutoff, 0, 1)
        np.testing.assert_allclose(out, expected, atol=1e-14)

    @pytest.mark.parametrize("tau_squared", [0.5, 0.08, 0.3])
    def test_unitary_on_valid_sectors(self, cutoff, tau_squared):
        spec = beam_splitter_unitary(BeamSplitterSpec.from_transmission(tau_squared), cutoff)
        u = spec.matrix[:, spec.valid]
        np.testing.assert_allclose(u.conj().T @ u, np.eye(u.shape[1]), atol=1e-10)

    def test_valid_mask_flags_high_sectors(self, cutoff):
        valid = beam_splitter_unitary(BeamSplitterSpec(tau=1.0, rho=0.0), cutoff).valid
        assert valid[0]
        assert not valid[cutoff.two_mode_dim - 1]

    def test_rejects_truncation_edge(self, cutoff):
        state = pure(cutoff, ket(cutoff, 5, 0))
        with pytest.raises(TruncationError):
            apply_beam_splitter(state, BeamSplitterSpec.from_transmission(0.5))


class TestTrueState:
    def test_ideal_symmetric(self, cutoff):
        rho = make_true_state(ModelSpec(eta_prep=1.0, eta_det=1.0), False).elements
        assert rho[1, 0, 1, 0] == pytest.approx(0.5)
        assert rho[0, 1, 0, 1] == pytest.approx(0.5)
        assert rho[1, 0, 0, 1] == pytest.approx(-0.5)
        assert rho[0, 1, 1, 0] == pytest.approx(-0.5)
        assert np.sum(np.abs(rho)) == pytest.approx(2.0)

    def test_mixture_without_loss(self, experiment_model):
        rho = make_true_state(experiment_model, False).elements
        assert rho[0, 0, 0, 0] == pytest.approx(0.36)
        assert rho[1, 0, 1, 0] == pytest.approx(0.32)
        assert rho[0, 1, 0, 1] == pytest.approx(0.32)
        assert rho[1, 0, 0, 1] == pytest.approx(-0.32)

    def test_mixture_with_loss(self, experiment_model):
        rho = make_true_state(experiment_model, True).elements
        assert rho[0, 0, 0, 0] == pytest.approx(1 - 0.64 * 0.86, abs=1e-12)
        assert rho[1, 0, 1, 0] == pytest.approx(0.2752, abs=1e-12)

    def test_random_models_are_valid_states(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            model = ModelSpec(
                eta_prep=float(rng.uniform(0, 1)),
                eta_det=float(rng.uniform(0.01, 1)),
                tau_squared=float(rng.uniform(0, 1)),
            )
            make_true_state(model, bool(rng.integers(2))).check()

    def test_zero_reflectivity_is_product(self, cutoff):
        model = ModelSpec(eta_prep=0.64, tau_squared=1.0)
        expected = tensor_product(make_input_state(0.64, cutoff), vacuum_single(cutoff))
        np.testing.assert_array_equal(
            make_true_state(model, False).elements, expected.elements
        )


class TestLoss:
    def test_lossless_identity(self, cutoff):
        state = random_state(cutoff, np.random.default_rng(1))
        assert apply_loss(state, 1.0) is state

    def test_single_photon_loss(self, cutoff):
        out = apply_loss(make_input_state(1.0, cutoff), 0.86).elements
        np.testing.assert_allclose(np.diag(out).real[:2], [0.14, 0.86], atol=1e-15)

    def test_vacuum_fixed(self, cutoff):
        vac = TwoModeDensityMatrix.vacuum(cutoff)
        np.testing.assert_allclose(apply_loss(vac, 0.3).elements, vac.elements)

    def test_composition(self, cutoff):
        state = random_state(cutoff, np.random.default_rng(2))
        twice = apply_loss(apply_loss(state, 0.7), 0.8)
        once = apply_loss(state, 0.56)
        np.testing.assert_allclose(twice.elements, once.elements, atol=1e-10)

    @pytest.mark.parametrize("mode", ["A", "B", "both"])
    def test_trace_preserved(self, cutoff, mode):
        state = random_state(cutoff, np.random.default_rng(3))
        assert apply_loss(state, 0.6, mode).trace() == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("eta", [0.0, -0.5, 1.5])
    def test_rejects_bad_eta(self, cutoff, eta):
        with pytest.raises(ParameterError):
            apply_loss(TwoModeDensityMatrix.vacuum(cutoff), eta)


class TestPhaseAverage:
    def test_sector_diagonal_unchanged(self, ideal_model):
        state = make_true_state(ideal_model, False)
        np.testing.assert_array_equal(phase_average(state).elements, state.elements)

    def test_off_sector_zeroed(self, cutoff):
        v = (ket(cutoff, 0, 0) + ket(cutoff, 1, 0)) / math.sqrt(2)
        out = phase_average(pure(cutoff, v)).elements
        assert out[0, 0, 1, 0] == 0.0
        assert out[0, 0, 0, 0] == pytest.approx(0.5)

    def test_idempotent_and_trace_preserving(self, cutoff):
        state = random_state(cutoff, np.random.default_rng(4))
        once = phase_average(state)
        np.testing.assert_array_equal(phase_average(once).elements, once.elements)
        assert once.trace() == pytest.approx(1.0, abs=1e-12)


class TestFidelity:
    def test_self(self, cutoff):
        state = random_state(cutoff, np.random.default_rng(5))
        assert fidelity(state, state) == pytest.approx(1.0, abs=1e-8)

    def test_orthogonal(self, cutoff):
        a = pure(cutoff, ket(cutoff, 1, 0))
        b = pure(cutoff, ket(cutoff, 0, 1))
        assert fidelity(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_mixture_against_pure(self):
        mixture = make_true_state(ModelSpec(eta_prep=0.64, eta_det=1.0), False)
        target = make_true_state(ModelSpec(eta_prep=1.0, eta_det=1.0), False)
        assert fidelity(mixture, target) == pytest.approx(0.64, abs=1e-10)
        assert fidelity(target, mixture) == pytest.approx(0.64, abs=1e-10)

    def test_rank_deficient_mixtures(self, cutoff):
        a = TwoModeDensityMatrix.from_matrix(
            cutoff, 0.36 * np.outer(ket(cutoff, 0, 0), ket(cutoff, 0, 0))
            + 0.64 * np.outer(ket(cutoff, 1, 0), ket(cutoff, 1, 0))
        )
        b = TwoModeDensityMatrix.from_matrix(
            cutoff, 0.5 * np.outer(ket(cutoff, 0, 0), ket(cutoff, 0, 0))
            + 0.5 * np.outer(ket(cutoff, 1, 0), ket(cutoff, 1, 0))
        )
        assert fidelity(a, b) == pytest.approx(0.98, abs=1e-10)
        assert fidelity(b, a) == pytest.approx(0.98, abs=1e-10)

    def test_symmetric(self, cutoff):
        rng = np.random.default_rng(6)
        a, b = random_state(cutoff, rng), random_state(cutoff, rng)
        assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            fidelity(
                TwoModeDensityMatrix.vacuum(FockCutoff(n_max=2)),
                TwoModeDensityMatrix.vacuum(FockCutoff(n_max=3)),
            )


class TestDensityMatrixChecks:
    def test_non_unit_trace(self, cutoff):
        rho = np.eye(cutoff.two_mode_dim)
        with pytest.raises(NumericalConsistencyError):
            TwoModeDensityMatrix.from_matrix(cutoff, rho).check()

    def test_document_round_trip(self, experiment_model):
        state = make_true_state(experiment_model, True)
        again = TwoModeDensityMatrix.from_document(state.to_document())
        np.testing.assert_array_equal(again.elements, state.elements)

    def test_single_mode_check(self):
        with pytest.raises(NumericalConsistencyError):
            SingleModeDensityMatrix(np.diag([0.5, 0.7])).check()
