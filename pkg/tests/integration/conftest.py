"""
Fixtures for end-to-end runs on a small configuration
"""

import json
from pathlib import Path

import pytest


@pytest.fixture
def small_config_data(tmp_path) -> dict:
    return {
        "model": {"eta_prep": 0.64, "eta_det": 0.86, "tau_squared": 0.5, "n_max": 2},
        "run": {"n_samples": 3000, "rng_seed": 5},
        "recon": {
            "n_max": 2,
            "eta_det": 0.86,
            "n_phase_bins": 6,
            "quad_edges": [-2.0, -1.0, 0.0, 1.0, 2.0],
            "max_iterations": 500,
            "tol": 1e-6,
        },
        "bell": {"threshold": 0.5, "n_phase_bins": 6, "min_events": 5},
        "bell_thresholds": [0.0, 0.5],
        "wigner_lo": -1.0,
        "wigner_hi": 1.0,
        "wigner_step": 0.5,
        "vacuum_samples": 2000,
        "output_dir": str(tmp_path / "out"),
    }


@pytest.fixture
def small_config_file(tmp_path, small_config_data) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(small_config_data), encoding="utf-8")
    return path
