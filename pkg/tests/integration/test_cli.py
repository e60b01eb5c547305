"""
Integration тесты командной строки
"""

import json

import pytest

from app.cli import build_parser, load_config, main
from app.core.exceptions import EXIT_NOT_CONVERGED, EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION


def simulate(config, out, *extra):
    return main(["simulate", "--config", str(config), "--out", str(out), *extra])


class TestParser:
    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["bell", "s.csv", "--sweep", "0", "0.5", "--threshold", "0.85"])
        assert args.command == "bell"
        assert args.sweep == [0.0, 0.5]

    def test_unknown_plane_is_usage_error(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["wigner", "state.json", "--plane", "XY_zero"])
        assert exc_info.value.code == EXIT_VALIDATION

    def test_negative_sweep_threshold(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["bell", "s.csv", "--sweep", "0.2", "-0.5"])
        assert exc_info.value.code == EXIT_VALIDATION

    def test_missing_command(self):
        with pytest.raises(SystemExit) as exc_info:
            main([])
        assert exc_info.value.code == EXIT_VALIDATION


class TestLoadConfig:
    def test_overrides_take_precedence(self, small_config_file):
        config = load_config(small_config_file, **{"run.rng_seed": 99, "run.n_samples": None})
        assert config.run.rng_seed == 99
        assert config.run.n_samples == 3000
        assert config.run.model == config.model

    def test_defaults_without_file(self):
        config = load_config(None)
        assert config.model.eta_prep == 0.64
        assert config.recon.n_max == config.model.n_max


class TestSimulateCommand:
    def test_writes_samples_and_manifest(self, tmp_path, small_config_file):
        out = tmp_path / "sim"
        code = simulate(small_config_file, out, "--seed", "3", "--n-samples", "500")
        assert code == EXIT_OK
        lines = (out / "samples.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "delta_theta,x_a,x_b"
        assert len(lines) == 501
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 3
        assert manifest["n_samples"] == 500

    def test_same_seed_same_file(self, tmp_path, small_config_file):
        simulate(small_config_file, tmp_path / "a", "--seed", "8", "--n-samples", "300")
        simulate(small_config_file, tmp_path / "b", "--seed", "8", "--n-samples", "300")
        first = (tmp_path / "a" / "samples.csv").read_bytes()
        assert first == (tmp_path / "b" / "samples.csv").read_bytes()

    def test_histograms(self, tmp_path, small_config_file):
        out = tmp_path / "sim"
        assert simulate(small_config_file, out, "--histograms") == EXIT_OK
        for name in ("hist2d_0.csv", "hist2d_pi_2.csv", "hist2d_pi.csv", "covariance.csv"):
            assert (out / name).exists()

    def test_invalid_sample_count(self, tmp_path, small_config_file, capsys):
        code = simulate(small_config_file, tmp_path / "sim", "--n-samples", "0")
        assert code == EXIT_VALIDATION
        assert "n_samples" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        code = simulate(tmp_path / "absent.json", tmp_path / "sim")
        assert code == EXIT_RUNTIME


class TestAnalysisCommands:
    @pytest.fixture
    def samples_path(self, tmp_path, small_config_file):
        simulate(small_config_file, tmp_path / "sim")
        return tmp_path / "sim" / "samples.csv"

    def test_reconstruct_and_wigner(self, tmp_path, small_config_file, samples_path, capsys):
        out = tmp_path / "rec"
        config = str(small_config_file)
        code = main(["reconstruct", str(samples_path), "--config", config, "--out", str(out)])
        assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
        result = json.loads((out / "state.json").read_text(encoding="utf-8"))
        assert result["state"]["n_max"] == 2
        assert result["fidelity"] is not None
        assert "Iterations:" in capsys.readouterr().out

        wig = tmp_path / "wig"
        code = main(
            [
                "wigner",
                str(out / "state.json"),
                "--config",
                str(small_config_file),
                "--out",
                str(wig),
                "--plane",
                "XB_zero",
            ]
        )
        assert code == EXIT_OK
        names = sorted(p.name for p in wig.iterdir())
        assert names == ["wigner_XB_zero.csv", "wigner_XB_zero.json"]
        assert "W(0,0,0,0)" in capsys.readouterr().out

    def test_bell(self, tmp_path, small_config_file, samples_path, capsys):
        out = tmp_path / "bell"
        code = main(
            [
                "bell",
                str(samples_path),
                "--config",
                str(small_config_file),
                "--out",
                str(out),
                "--sweep",
                "0",
                "0.5",
            ]
        )
        assert code == EXIT_OK
        summary = json.loads((out / "bell_summary.json").read_text(encoding="utf-8"))
        assert summary["threshold"] == 0.5
        assert summary["analytic_amplitude_corrected"] is not None
        sweep = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert len(sweep) == 3
        assert (out / "sweep_model.csv").exists()
        assert "V =" in capsys.readouterr().out

    def test_malformed_samples(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("delta_theta,x_a,x_b\n0.1,0.2\n", encoding="utf-8")
        code = main(["bell", str(path), "--out", str(tmp_path / "bell")])
        assert code == EXIT_VALIDATION
        assert "SAMPLE_FORMAT_ERROR" in capsys.readouterr().err
