"""End-to-end CLI run: synth -> select-k -> train -> evaluate.

Determinism is checked on a small corpus by running the pipeline twice and
comparing every output byte for byte. The desk-scale run (600 events of 100
frames, default iteration budget, K from 1 to 8) is timed against a five
minute limit.
"""

import logging
import time

import pandas as pd
import pytest
import yaml

from app.core.serialization import load_model
from app.main import EXIT_OK, main

pytestmark = pytest.mark.slow

FEATURES = ["--features", "dv_lead,dx_lag,vx_ego"]
DESK_SCALE_SECONDS = 300.0


@pytest.fixture(autouse=True)
def isolated_logging(monkeypatch):
    """Clear MERGE_STATES_* overrides and restore the root logger after main()."""
    for name in ("LOG_LEVEL", "LOG_FORMAT", "ENVIRONMENT", "WORKERS"):
        monkeypatch.delenv(f"MERGE_STATES_{name}", raising=False)
    root_logger = logging.getLogger()
    handlers = list(root_logger.handlers)
    level = root_logger.level
    yield
    root_logger.handlers[:] = handlers
    root_logger.setLevel(level)


def _write_config(path, training, selection, n_events, length, workers):
    """Four-feature generator (three inputs plus vy_ego)."""
    config = {
        "training": {**training, "workers": workers},
        "data": {"train_fraction": 0.8, "split_seed": 5},
        "selection": selection,
        "evaluation": {
            "feature_sets": [["dv_lead"], ["dv_lead", "vx_ego"], ["dv_lead", "dx_lag", "vx_ego"]],
            "workers": workers,
        },
        "synth": {
            "features": ["dv_lead", "dx_lag", "vx_ego", "vy_ego"],
            "means": [
                [0.25, 5.6, -3.3, 0.2],
                [-0.55, 6.5, -2.1, 0.5],
                [-0.95, 7.25, -3.8, 0.1],
            ],
            "stds": [
                [0.32, 2.0, 0.45, 0.08],
                [0.18, 0.57, 0.23, 0.08],
                [0.25, 0.62, 0.3, 0.08],
            ],
            "n_events": n_events,
            "length": length,
        },
        "logging": {"level": "WARNING"},
    }
    path.write_text(yaml.safe_dump(config))
    return path


@pytest.fixture
def config_file(tmp_path):
    """120 events x 50 frames, 40 EM iterations, two workers."""
    return _write_config(
        tmp_path / "config.yaml",
        training={"k": 3, "max_iters": 40, "seed": 11},
        selection={"k_min": 1, "k_max": 5},
        n_events=120,
        length=50,
        workers=2,
    )


@pytest.fixture
def desk_config_file(tmp_path):
    """600 events x 100 frames with the default iteration budget."""
    return _write_config(
        tmp_path / "desk.yaml",
        training={"k": 3, "seed": 11},
        selection={"k_min": 1, "k_max": 8},
        n_events=600,
        length=100,
        workers=4,
    )




def _pipeline(config_file, root):
    """Run every stage into root and return the written files by relative path."""
    config = ["--config", str(config_file)]
    corpus = root / "corpus"
    steps = [
        ["synth", *config, "--out", str(corpus)],
        ["select-k", *config, "--corpus", str(corpus), "--out", str(root / "bic"), *FEATURES],
        ["train", *config, "--corpus", str(corpus), "--out", str(root / "model"), *FEATURES],
        ["evaluate", *config, "--corpus", str(corpus), "--out", str(root / "evaluation"), *FEATURES],
    ]
    for argv in steps:
        assert main(argv) == EXIT_OK, argv[0]
    return {
        path.relative_to(root).as_posix(): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


class TestPipeline:
    """Test the command sequence a user runs on a fresh corpus."""

    def test_outputs_are_complete(self, config_file, tmp_path):
        """Test that every stage leaves its documented outputs behind."""
        outputs = _pipeline(config_file, tmp_path / "run")

        assert {
            "corpus/events.csv",
            "corpus/manifest.yaml",
            "corpus/truth_model.yaml",
            "corpus/states.csv",
            "bic/bic.txt",
            "bic/bic.csv",
            "model/model.yaml",
            "model/trace.csv",
            "evaluation/variables.txt",
            "evaluation/variables.csv",
            "evaluation/approaches.txt",
            "evaluation/approaches.csv",
        } <= set(outputs)

        bic = pd.read_csv(tmp_path / "run" / "bic" / "bic.csv", comment="#")
        assert bic["k"].tolist() == [1, 2, 3, 4, 5]
        assert bic["bic"][0] > bic["bic"].min()

        model = load_model(tmp_path / "run" / "model" / "model.yaml")
        assert model.K == 3
        assert model.schema.names == ("dv_lead", "dx_lag", "vx_ego", "vy_ego")

        approaches = pd.read_csv(tmp_path / "run" / "evaluation" / "approaches.csv", comment="#")
        assert approaches["approach"].tolist() == ["hmm_gmr", "hmm_gmr", "gmm_gmr", "gmm_gmr"]
        assert (approaches["n_scored"] == 24).all()

    def test_fixed_seed_is_deterministic(self, config_file, tmp_path):
        """Test that two runs with the same configuration write identical bytes."""
        first = _pipeline(config_file, tmp_path / "first")
        second = _pipeline(config_file, tmp_path / "second")

        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], name

    def test_desk_scale_run_within_time_limit(self, desk_config_file, tmp_path):
        """Test the full-size corpus through every stage in under five minutes."""
        started = time.perf_counter()
        outputs = _pipeline(desk_config_file, tmp_path / "desk")
        elapsed = time.perf_counter() - started

        assert elapsed < DESK_SCALE_SECONDS
        assert "evaluation/approaches.csv" in outputs
        bic = pd.read_csv(tmp_path / "desk" / "bic" / "bic.csv", comment="#")
        assert bic["k"].tolist() == list(range(1, 9))
        model = load_model(tmp_path / "desk" / "model" / "model.yaml")
        assert model.schema.D == 4
        approaches = pd.read_csv(tmp_path / "desk" / "evaluation" / "approaches.csv", comment="#")
        assert (approaches["n_scored"] == 120).all()
