"""
Integration tests for the full pipeline
"""

import json
import math

import pytest
from pydantic import ValidationError

from app.cli import main
from app.core.exceptions import EXIT_NOT_CONVERGED, EXIT_OK
from app.schemas.bell import BellSummary
from app.schemas.pipeline import PipelineConfig
from app.schemas.state import ModelSpec
from app.services.fock import make_true_state
from app.services.pipeline import (
    bell_ok,
    calibrate_vacuum,
    ground_truth,
    origin_from_parity,
    run_pipeline,
    wigner_ok,
)

ARTIFACTS = [
    "config.json",
    "report.json",
    "simulate/samples.csv",
    "simulate/manifest.json",
    "simulate/marginals.csv",
    "simulate/covariance.csv",
    "reconstruct/state.json",
    "reconstruct/rho_abs.csv",
    "wigner/wigner_XA_PA_zero.csv",
    "wigner/wigner_PA_PB_zero.json",
    "wigner/wigner_XB_zero.csv",
    "bell/bell_curve.csv",
    "bell/bell_summary.json",
    "bell/sweep.csv",
    "bell/sweep_model.csv",
]


class TestPipelineConfig:
    def test_model_propagates_to_run(self, small_config_data):
        config = PipelineConfig.model_validate(small_config_data)
        assert config.run.model == config.model

    def test_conflicting_run_model(self, small_config_data):
        small_config_data["run"]["model"] = {"eta_prep": 0.5, "n_max": 2}
        with pytest.raises(ValidationError):
            PipelineConfig.model_validate(small_config_data)

    def test_cutoff_mismatch(self, small_config_data):
        small_config_data["recon"]["n_max"] = 3
        with pytest.raises(ValidationError):
            PipelineConfig.model_validate(small_config_data)

    def test_transmissions(self, small_config_data):
        small_config_data["tau_squared"] = [0.5, 0.08]
        assert PipelineConfig.model_validate(small_config_data).transmissions_list == [0.5, 0.08]


class TestRunPipeline:
    def test_artifacts_for_each_splitter(self, tmp_path, small_config_data):
        small_config_data["tau_squared"] = [0.5, 0.08]
        config = PipelineConfig.model_validate(small_config_data)
        reports = run_pipeline(config)
        assert [r.tau_squared for r in reports] == [0.5, 0.08]
        root = tmp_path / "out"
        assert (root / "config.json").exists()
        for name in ("tau2_0.5", "tau2_0.08"):
            for artifact in ARTIFACTS:
                assert (root / name / artifact).exists(), f"{name}/{artifact}"
        for report in reports:
            stages = {s.name: s for s in report.stages}
            assert list(stages) == ["simulate", "reconstruct", "wigner", "bell"]
            assert stages["simulate"].ok
            assert stages["wigner"].ok
            assert stages["bell"].ok

    def test_reproducible(self, tmp_path, small_config_data):
        first = PipelineConfig.model_validate(
            {**small_config_data, "output_dir": str(tmp_path / "a")}
        )
        second = first.model_copy(update={"output_dir": str(tmp_path / "b")})
        run_pipeline(first)
        run_pipeline(second)
        path = "tau2_0.5/simulate/samples.csv"
        assert (tmp_path / "a" / path).read_bytes() == (tmp_path / "b" / path).read_bytes()
        state_a = json.loads((tmp_path / "a" / "tau2_0.5/reconstruct/state.json").read_text())
        state_b = json.loads((tmp_path / "b" / "tau2_0.5/reconstruct/state.json").read_text())
        assert state_a["state"] == state_b["state"]

    def test_cli_pipeline(self, tmp_path, small_config_file, capsys):
        out = tmp_path / "cli"
        code = main(["pipeline", "--config", str(small_config_file), "--out", str(out)])
        assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
        report = json.loads((out / "tau2_0.5" / "report.json").read_text(encoding="utf-8"))
        names = [s["name"] for s in report["stages"]]
        assert names == ["simulate", "reconstruct", "wigner", "bell"]
        assert "[tau^2=0.5] bell: ok" in capsys.readouterr().out


class TestStages:
    def test_vacuum_calibration(self):
        result = calibrate_vacuum(20000, 1)
        assert result["var_a"] == pytest.approx(0.5, abs=0.03)
        assert result["deviation_sigmas"] < 5

    def test_ground_truth_partial_correction(self, experiment_model):
        full = ground_truth(experiment_model, experiment_model.eta_det)
        assert full.elements[0, 0, 0, 0].real == pytest.approx(0.36)
        uncorrected = ground_truth(experiment_model, 1.0)
        assert uncorrected.elements[0, 0, 0, 0].real == pytest.approx(0.4496)


class TestStageChecks:
    @pytest.mark.parametrize("eta", [0.0, 0.64, 1.0])
    def test_origin_from_parity(self, eta):
        state = make_true_state(ModelSpec(eta_prep=eta, eta_det=1.0), False)
        assert origin_from_parity(state) == pytest.approx((1 - 2 * eta) / math.pi**2, abs=1e-14)

    def test_wigner_check(self, experiment_model):
        state = make_true_state(experiment_model, True)
        origin = origin_from_parity(state)
        assert wigner_ok(state, origin, experiment_model)
        assert not wigner_ok(state, origin + 1e-6, experiment_model)

    @pytest.mark.parametrize(
        "amplitude,expected", [(0.8, True), (1.2, False), (float("nan"), False)]
    )
    def test_bell_check(self, amplitude, expected):
        summary = BellSummary(
            threshold=0.85,
            amplitude=amplitude,
            sigma_amplitude=0.02,
            s_value=2.0,
            retained_fraction=0.4,
            violation=False,
            significance=0.0,
        )
        assert bell_ok(summary) is expected
