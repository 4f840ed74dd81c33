"""Unit tests for the main entry point.

Tests the main() function including:
- CLI argument parsing and usage errors
- Settings priority (CLI > env > config)
- Every subcommand on a small synthetic corpus
- Exit code handling
"""

import logging
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest
import yaml

from app.core import EventSequence, GmmModel, HmmModel
from app.core.serialization import load_model, save_model
from app.data import Corpus, load_corpus, save_corpus
from app.main import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, build_parser, main, resolve_settings
from tests.helpers import random_hmm, three_phase_spec

FIXTURES_DIR = Path(__file__).parent / "fixtures"
FEATURES = ["--features", "dv_lead,vx_ego"]


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


@pytest.fixture
def config_file(tmp_path):
    """Small, fast configuration around the three-state generator."""
    path = tmp_path / "config.yaml"
    config = {
        "training": {"k": 3, "max_iters": 20},
        "synth": three_phase_spec(n_events=20, length=20).model_dump(),
        "logging": {"level": "WARNING"},
    }
    path.write_text(yaml.safe_dump(config))
    return path


@pytest.fixture
def corpus_dir(tmp_path, config_file):
    """Corpus directory written by the synth command."""
    out = tmp_path / "corpus"
    assert main(["synth", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    return out


@pytest.fixture
def model_path(tmp_path, config_file, corpus_dir):
    """HMM trained by the train command."""
    out = tmp_path / "model"
    argv = ["train", "--config", str(config_file), "--corpus", str(corpus_dir), "--out", str(out)]
    assert main(argv + FEATURES) == EXIT_OK
    return out / "model.yaml"


def _run(command, config_file, *args):
    return main([command, "--config", str(config_file), *[str(a) for a in args]])


class TestArgumentParsing:
    """Test command-line parsing and usage errors."""

    def test_no_command(self, capsys):
        """Test that a missing subcommand is a usage error."""
        assert main([]) == EXIT_USAGE
        assert "merge-states" in capsys.readouterr().err

    def test_unknown_command(self):
        """Test that an unknown subcommand is a usage error."""
        assert main(["fit-everything"]) == EXIT_USAGE

    def test_missing_required_option(self):
        """Test that train without --out is a usage error."""
        assert main(["train", "--corpus", "somewhere"]) == EXIT_USAGE

    def test_non_positive_k(self, tmp_path):
        """Test that --k must be a positive integer."""
        assert main(["train", "--corpus", "c", "--out", str(tmp_path), "--k", "0"]) == EXIT_USAGE

    def test_repeatable_options(self):
        """Test list-valued options of evaluate."""
        args = build_parser().parse_args(
            [
                "evaluate", "--corpus", "c", "--out", "o",
                "--feature-set", "dv_lead", "--feature-set", "dv_lead, vx_ego",
                "--approach", "hmm_gmr", "--init-method", "k_means",
            ]
        )

        assert args.feature_set == [["dv_lead"], ["dv_lead", "vx_ego"]]
        assert args.approach == ["hmm_gmr"]
        assert args.init_method == ["k_means"]
        assert args.protocol == "all"


class TestSettingsResolution:
    """Test settings priority: CLI > environment > config > default."""

    def test_flags_override_config(self, config_file):
        """Test that training flags replace config values."""
        args = build_parser().parse_args(
            ["train", "--config", str(config_file), "--corpus", "c", "--out", "o",
             "--k", "5", "--init", "k_means", "--workers", "2"]
        )

        app_config, _, log_level, log_format = resolve_settings(args)

        assert app_config.training.k == 5
        assert app_config.training.init_method == "k_means"
        assert app_config.training.max_iters == 20
        assert app_config.training.workers == 2
        assert app_config.evaluation.workers == 2
        assert log_level == "WARNING"
        assert log_format == "key-value"

    def test_environment_between_flag_and_config(self, config_file, monkeypatch):
        """Test log level and worker priority across the three sources."""
        monkeypatch.setenv("MERGE_STATES_LOG_LEVEL", "error")
        monkeypatch.setenv("MERGE_STATES_WORKERS", "3")
        parser = build_parser()
        base = ["train", "--config", str(config_file), "--corpus", "c", "--out", "o"]

        _, _, from_env, _ = resolve_settings(parser.parse_args(base))
        _, _, from_flag, _ = resolve_settings(parser.parse_args(base + ["--log-level", "DEBUG"]))
        app_config, _, _, _ = resolve_settings(parser.parse_args(base))

        assert from_env == "ERROR"
        assert from_flag == "DEBUG"
        assert app_config.training.workers == 3

    def test_logging_configured_from_settings(self, config_file, tmp_path):
        """Test that main passes the resolved level and environment to configure_logging."""
        with patch("app.main.configure_logging") as mock_configure:
            code = main(
                ["synth", "--config", str(config_file), "--out", str(tmp_path / "c"),
                 "--log-format", "json", "--n-events", "3"]
            )

        assert code == EXIT_OK
        mock_configure.assert_called_once_with(
            level="WARNING", format_type="json", environment="local"
        )

    def test_missing_config_file(self, tmp_path):
        """Test that an explicit but missing config file exits with 1."""
        code = main(["synth", "--config", str(tmp_path / "absent.yaml"), "--out", str(tmp_path)])

        assert code == EXIT_USAGE

    def test_invalid_environment(self, config_file, tmp_path, monkeypatch, capsys):
        """Test that a bad environment override exits with 1."""
        monkeypatch.setenv("MERGE_STATES_WORKERS", "zero")

        assert _run("synth", config_file, "--out", tmp_path / "c") == EXIT_USAGE
        assert "MERGE_STATES_WORKERS" in capsys.readouterr().err

    def test_invalid_training_flag(self, config_file, tmp_path):
        """Test that a flag violating the training schema exits with 1."""
        assert _run("synth", config_file, "--out", tmp_path / "c", "--rel-tol", "-1") == EXIT_USAGE


class TestCommands:
    """Test every subcommand end to end on a small corpus."""

    def test_synth(self, corpus_dir, capsys):
        """Test the corpus, truth model and state paths written by synth."""
        corpus = load_corpus(corpus_dir)
        truth = load_model(corpus_dir / "truth_model.yaml")
        states = pd.read_csv(corpus_dir / "states.csv", comment="#")

        assert len(corpus) == 20
        assert (len(corpus.split.train_ids), len(corpus.split.test_ids)) == (16, 4)
        assert isinstance(truth, HmmModel)
        assert truth.schema == corpus.schema
        assert len(states) == 400
        assert set(states["state"]) <= {1, 2, 3}
        assert str(corpus_dir / "truth_model.yaml") in capsys.readouterr().out

    def test_synth_overrides(self, config_file, tmp_path):
        """Test --n-events and --length."""
        out = tmp_path / "small"

        assert _run("synth", config_file, "--out", out, "--n-events", 4, "--length", 6) == EXIT_OK
        corpus = load_corpus(out)
        assert len(corpus) == 4
        assert corpus.events[0].T == 6

    def test_ingest(self, config_file, tmp_path):
        """Test extraction from the fixture recording with a skipped event."""
        out = tmp_path / "ingested"

        code = _run(
            "ingest", config_file,
            "--tracks", FIXTURES_DIR / "tracks.csv",
            "--labels", FIXTURES_DIR / "labels.csv",
            "--out", out,
        )

        assert code == EXIT_OK
        corpus = load_corpus(out)
        assert corpus.event_ids == ["merge-1", "merge-3"]
        assert corpus.events[0].T == 100
        assert corpus.split is not None
        skipped = pd.read_csv(out / "skipped.csv", comment="#")
        assert skipped["event_id"].tolist() == ["merge-2"]

    def test_ingest_without_alignment(self, config_file, tmp_path):
        """Test that --no-align keeps recorded lengths."""
        out = tmp_path / "raw"

        code = _run(
            "ingest", config_file,
            "--tracks", FIXTURES_DIR / "tracks.csv",
            "--labels", FIXTURES_DIR / "labels.csv",
            "--out", out, "--no-align",
        )

        assert code == EXIT_OK
        assert [e.T for e in load_corpus(out).events] == [5, 3]

    def test_ingest_bad_tracks(self, config_file, tmp_path, capsys):
        """Test that an invalid recording exits with 2 and names the line."""
        code = _run(
            "ingest", config_file,
            "--tracks", FIXTURES_DIR / "tracks_invalid.csv",
            "--labels", FIXTURES_DIR / "labels.csv",
            "--out", tmp_path / "x",
        )

        assert code == EXIT_DATA
        assert "line 3" in capsys.readouterr().err

    def test_train(self, model_path):
        """Test the model document and EM trace of train."""
        model = load_model(model_path)
        trace = pd.read_csv(model_path.parent / "trace.csv", comment="#")

        assert isinstance(model, HmmModel)
        assert model.K == 3
        assert model.schema.names == ("dv_lead", "vx_ego", "vy_ego")
        assert np.all(np.diff(trace["log_likelihood"]) >= -1e-8)
        assert "# kind: hmm" in (model_path.parent / "trace.csv").read_text()

    def test_train_gmm(self, config_file, corpus_dir, tmp_path):
        """Test that --approach gmm writes a GMM document."""
        out = tmp_path / "gmm"

        code = _run("train", config_file, "--corpus", corpus_dir, "--out", out, "--approach", "gmm", *FEATURES)

        assert code == EXIT_OK
        model = load_model(out / "model.yaml")
        assert isinstance(model, GmmModel)
        assert model.source == "independent"

    def test_train_unknown_feature(self, config_file, corpus_dir, tmp_path):
        """Test that features missing from the corpus exit with 2."""
        code = _run("train", config_file, "--corpus", corpus_dir, "--out", tmp_path / "m")

        assert code == EXIT_DATA

    def test_select_k(self, config_file, corpus_dir, tmp_path):
        """Test the BIC table of select-k."""
        out = tmp_path / "bic"

        code = _run(
            "select-k", config_file, "--corpus", corpus_dir, "--out", out,
            "--k-min", 1, "--k-max", 3, *FEATURES,
        )

        assert code == EXIT_OK
        table = pd.read_csv(out / "bic.csv", comment="#")
        assert table["k"].tolist() == [1, 2, 3]
        assert "best K:" in (out / "bic.txt").read_text()

    def test_select_k_inverted_range(self, config_file, corpus_dir, tmp_path):
        """Test that --k-max below --k-min is a usage error."""
        code = _run(
            "select-k", config_file, "--corpus", corpus_dir, "--out", tmp_path,
            "--k-min", 4, "--k-max", 2, *FEATURES,
        )

        assert code == EXIT_USAGE

    def test_decode(self, config_file, corpus_dir, model_path, tmp_path):
        """Test one belief row per frame of every event."""
        out = tmp_path / "decode"

        code = _run("decode", config_file, "--model", model_path, "--corpus", corpus_dir, "--out", out)

        assert code == EXIT_OK
        beliefs = pd.read_csv(out / "beliefs.csv", comment="#")
        assert len(beliefs) == 400
        np.testing.assert_allclose(beliefs["row_sum"], 1.0, atol=1e-9)
        assert set(beliefs["dominant_state"]) <= {1, 2, 3}

    def test_predict_test_split(self, config_file, corpus_dir, model_path, tmp_path):
        """Test predictions with references for the test events."""
        out = tmp_path / "predict"

        code = _run(
            "predict", config_file, "--model", model_path, "--corpus", corpus_dir,
            "--out", out, "--split", "test",
        )

        assert code == EXIT_OK
        predictions = pd.read_csv(out / "predictions.csv", comment="#")
        test_ids = load_corpus(corpus_dir).split.test_ids
        assert predictions["event_id"].unique().tolist() == test_ids
        assert {"reference_vy_ego", "predicted_vy_ego", "h_3", "mean_3_vy_ego"} <= set(predictions)
        assert "# regressor: hmm_gmr" in (out / "predictions.csv").read_text()

    def test_predict_unknown_event(self, config_file, corpus_dir, model_path, tmp_path):
        """Test that an unknown --event exits with 2."""
        code = _run(
            "predict", config_file, "--model", model_path, "--corpus", corpus_dir,
            "--out", tmp_path, "--event", "nope",
        )

        assert code == EXIT_DATA

    def test_state_ranges(self, config_file, corpus_dir, model_path, tmp_path):
        """Test one row per state."""
        out = tmp_path / "ranges"

        code = _run(
            "state-ranges", config_file, "--model", model_path, "--corpus", corpus_dir, "--out", out
        )

        assert code == EXIT_OK
        table = pd.read_csv(out / "state_ranges.csv", comment="#")
        assert table["state"].tolist() == [1, 2, 3]
        assert "dv_lead_min" in table.columns

    def test_evaluate_compare(self, config_file, corpus_dir, tmp_path):
        """Test the approach comparison table."""
        out = tmp_path / "eval"

        code = _run(
            "evaluate", config_file, "--corpus", corpus_dir, "--out", out, "--protocol", "compare",
            "--approach", "hmm_gmr", "--approach", "gmm_gmr", "--init-method", "k_bins", *FEATURES,
        )

        assert code == EXIT_OK
        table = pd.read_csv(out / "approaches.csv", comment="#")
        assert table["approach"].tolist() == ["hmm_gmr", "gmm_gmr"]
        assert table["n_scored"].tolist() == [4, 4]
        assert "# gmm_source: independent" in (out / "approaches.txt").read_text()

    def test_evaluate_sweep(self, config_file, corpus_dir, tmp_path):
        """Test the variable sweep with explicit feature sets."""
        out = tmp_path / "sweep"

        code = _run(
            "evaluate", config_file, "--corpus", corpus_dir, "--out", out, "--protocol", "sweep",
            "--feature-set", "dv_lead", "--feature-set", "dv_lead,vx_ego",
        )

        assert code == EXIT_OK
        table = pd.read_csv(out / "variables.csv", comment="#")
        assert sorted(table["features"]) == ["dv_lead", "dv_lead,vx_ego"]
        assert (out / "variables_events.csv").exists()

    def test_missing_corpus(self, config_file, tmp_path, capsys):
        """Test that a missing corpus directory exits with 2."""
        code = _run("train", config_file, "--corpus", tmp_path / "nowhere", "--out", tmp_path, *FEATURES)

        assert code == EXIT_DATA
        assert "Data error" in capsys.readouterr().err

    def test_numerical_failure(self, config_file, tmp_path, capsys):
        """Test that an observation no state can explain exits with 3."""
        model = random_hmm(np.random.default_rng(0), K=2, D=2)
        values = np.zeros((4, 2))
        values[2, 0] = 1e200
        event = EventSequence("overflow", values, np.arange(4) * 100.0, model.schema)
        save_corpus(Corpus(events=(event,), schema=model.schema), tmp_path / "corpus")
        save_model(model, tmp_path / "model.yaml")

        code = _run(
            "predict", config_file, "--model", tmp_path / "model.yaml",
            "--corpus", tmp_path / "corpus", "--out", tmp_path / "out",
        )

        assert code == EXIT_NUMERIC
        assert "Numerical failure" in capsys.readouterr().err
