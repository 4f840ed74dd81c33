"""Tests for EM initialization, Baum-Welch training and BIC selection."""

import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from app.core import EventSequence, FeatureSchema, GmmModel, HmmModel, regularize_covariance
from app.data import synth_corpus_with_states
from app.inference import forward
from app.learning import (
    InitializationError,
    TrainingConfig,
    TrainingTrace,
    bic_score,
    count_parameters,
    fit,
    fit_gmm,
    init_gmm,
    init_k_bins,
    init_k_means,
    k_bins_labels,
    select_k,
)
from app.learning.em import SufficientStatistics, e_step, sequence_batches
from app.learning.initialization import chain_from_labels
from tests.helpers import random_event, random_schema, three_phase_spec

PAIR_SCHEMA = FeatureSchema(names=("vx_ego", "vy_ego"))


def _event(values, event_id="e", schema=PAIR_SCHEMA):
    values = np.asarray(values, dtype=float)
    return EventSequence(event_id, values, np.arange(len(values)) * 100.0, schema)


def _matched_means(model, truth):
    """Model means reordered to best match the truth's components."""
    estimated = np.stack([c.mean for c in model.components])
    expected = np.stack([c.mean for c in truth.components])
    cost = np.linalg.norm(expected[:, None, :] - estimated[None, :, :], axis=2)
    _, order = linear_sum_assignment(cost)
    return estimated[order], expected


@pytest.fixture(scope="module")
def three_phase_draw():
    """Small three-state corpus with its generating model."""
    return synth_corpus_with_states(three_phase_spec(n_events=60, length=40), seed=1)


class TestKBins:
    """Tests for equal-duration time-bin initialization."""

    def test_labels_split_by_time(self):
        """Test that four frames fall into two bins of two."""
        labels = k_bins_labels([_event(np.zeros((4, 2)))], 2)

        np.testing.assert_array_equal(labels[0], [0, 0, 1, 1])

    def test_single_bin_is_global_moments(self):
        """Test that K=1 fits the pooled sample mean and covariance."""
        rng = np.random.default_rng(0)
        events = [random_event(rng, 20, PAIR_SCHEMA, f"e{i}") for i in range(3)]
        X = np.vstack([e.values for e in events])

        model = init_k_bins(events, 1)

        np.testing.assert_allclose(model.components[0].mean, X.mean(axis=0))
        np.testing.assert_allclose(
            model.components[0].covariance, regularize_covariance(np.cov(X.T, bias=True))
        )
        np.testing.assert_array_equal(model.trans, [[1.0]])

    def test_identical_frames_share_regularized_zero_covariance(self):
        """Test degenerate data: both bins get the same mean and eps * I."""
        event = _event(np.tile([[-3.0, 0.5]], (4, 1)))

        model = init_k_bins([event], 2)

        for component in model.components:
            np.testing.assert_array_equal(component.mean, [-3.0, 0.5])
            np.testing.assert_allclose(component.covariance, 1e-6 * np.eye(2))

    def test_three_phase_means(self):
        """Test that bins of phase-ordered events recover the phase means."""
        rng = np.random.default_rng(1)
        phase_means = np.array([[-3.0, 0.2], [-2.0, 0.6], [-4.0, 0.1]])
        events = []
        for i in range(20):
            values = np.repeat(phase_means, 10, axis=0) + 0.02 * rng.normal(size=(30, 2))
            events.append(_event(values, f"e{i}"))

        model = init_k_bins(events, 3)

        recovered = np.stack([c.mean for c in model.components])
        np.testing.assert_allclose(recovered, phase_means, rtol=0.1)

    def test_sequence_shorter_than_k(self):
        """Test that T < K is an initialization error."""
        with pytest.raises(InitializationError, match="fewer than K=4"):
            init_k_bins([_event(np.zeros((3, 2)))], 4)

    def test_smoothed_chain(self):
        """Test add-one smoothing of pi and the transition counts."""
        pi, trans = chain_from_labels([np.array([0, 0, 1])], 2)

        np.testing.assert_allclose(pi, [2 / 3, 1 / 3])
        np.testing.assert_allclose(trans, [[0.5, 0.5], [0.5, 0.5]])


class TestKMeans:
    """Tests for K-means initialization."""

    def _blobs(self, seed=2):
        rng = np.random.default_rng(seed)
        centers = np.array([[-4.0, 8.0], [5.0, 2.0]])
        events = []
        for i in range(10):
            center = centers[i % 2]
            events.append(_event(center + 0.3 * rng.normal(size=(20, 2)), f"e{i}"))
        return events, centers

    def test_single_cluster_matches_k_bins(self):
        """Test that K=1 is identical for both initializers."""
        events, _ = self._blobs()

        assert init_k_means(events, 1, seed=3) == init_k_bins(events, 1)

    def test_separated_blobs(self):
        """Test centroids within 5% of the blob centres."""
        events, centers = self._blobs()

        model = init_k_means(events, 2, seed=0)

        recovered = sorted((tuple(c.mean) for c in model.components), key=lambda m: m[0])
        np.testing.assert_allclose(np.array(recovered), centers, rtol=0.05)

    def test_same_seed_same_model(self):
        """Test determinism for a fixed seed."""
        rng = np.random.default_rng(4)
        events = [random_event(rng, 30, PAIR_SCHEMA, f"e{i}") for i in range(4)]

        assert init_k_means(events, 3, seed=7) == init_k_means(events, 3, seed=7)

    def test_too_few_frames(self):
        """Test that fewer pooled frames than clusters is rejected."""
        with pytest.raises(InitializationError):
            init_k_means([_event(np.zeros((2, 2)))], 3)

    def test_schemas_must_agree(self):
        """Test that mixed schemas cannot be pooled."""
        rng = np.random.default_rng(5)
        other = FeatureSchema(names=("dv_lead", "vy_ego"))
        events = [random_event(rng, 10, PAIR_SCHEMA, "a"), random_event(rng, 10, other, "b")]

        with pytest.raises(InitializationError, match="schema"):
            init_k_means(events, 2)


class TestFit:
    """Tests for Baum-Welch EM."""

    def test_monotone_over_random_trials(self):
        """Test that no iteration lowers the pooled likelihood, over 100 trials."""
        rng = np.random.default_rng(6)
        schema = random_schema(2)
        for trial in range(100):
            offsets = rng.normal(scale=3.0, size=(3, 2))
            events = []
            for i in range(4):
                values = random_event(rng, 15, schema).values + offsets[i % 3]
                events.append(_event(values, f"e{i}", schema))
            config = TrainingConfig(
                k=1 + trial % 3,
                init_method="k_bins" if trial % 2 else "k_means",
                seed=trial,
                max_iters=25,
            )

            model, trace = fit(events, config)

            assert trace.is_monotone(), trace.log_likelihoods
            assert isinstance(model, HmmModel)

    def test_single_state_reaches_mle_in_one_iteration(self):
        """Test that K=1 EM reproduces the closed-form moments."""
        rng = np.random.default_rng(7)
        events = [random_event(rng, 25, PAIR_SCHEMA, f"e{i}") for i in range(4)]
        X = np.vstack([e.values for e in events])

        model, trace = fit(events, TrainingConfig(k=1, max_iters=1))

        np.testing.assert_allclose(model.components[0].mean, X.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(
            model.components[0].covariance,
            regularize_covariance(np.cov(X.T, bias=True)),
            atol=1e-12,
        )
        assert trace.iterations_run == 1

    def test_recovers_generator_means(self, three_phase_draw):
        """Test recovered means against the generating model."""
        corpus, truth, _ = three_phase_draw

        model, trace = fit(list(corpus.events), TrainingConfig(k=3))

        recovered, expected = _matched_means(model, truth)
        np.testing.assert_allclose(recovered, expected, rtol=0.05, atol=0.05)
        assert trace.is_monotone()

    def test_label_permutation_equivalence(self, three_phase_draw):
        """Test that a permuted start yields the same model, permuted."""
        corpus, _, _ = three_phase_draw
        events = list(corpus.events)[:20]
        config = TrainingConfig(k=3, max_iters=15, rel_tol=1e-12)
        start = init_k_bins(events, 3)
        order = [2, 0, 1]

        base, _ = fit(events, config, initial_model=start)
        permuted, _ = fit(events, config, initial_model=start.permuted(order))
        expected = base.permuted(order)

        np.testing.assert_allclose(permuted.pi, expected.pi, atol=1e-8)
        np.testing.assert_allclose(permuted.trans, expected.trans, atol=1e-8)
        for got, want in zip(permuted.components, expected.components):
            np.testing.assert_allclose(got.mean, want.mean, atol=1e-8)
            np.testing.assert_allclose(got.covariance, want.covariance, atol=1e-8)

    def test_parallel_e_step_is_bitwise_identical(self, three_phase_draw):
        """Test that the thread pool reduces statistics in sequence order."""
        corpus, _, _ = three_phase_draw
        events = list(corpus.events)[:12]

        serial, _ = fit(events, TrainingConfig(k=3, max_iters=5, workers=1))
        threaded, _ = fit(events, TrainingConfig(k=3, max_iters=5, workers=4))

        assert serial == threaded

    def test_threaded_batches_reduce_in_order(self, three_phase_draw):
        """Test that E-step statistics over many small batches match across worker counts."""
        corpus, _, _ = three_phase_draw
        events = list(corpus.events)[:20]
        observations = [e.values for e in events]
        shift = np.vstack(observations).mean(axis=0)
        model = init_k_bins(events, 3)

        serial = e_step(model, observations, shift, workers=1, batch_size=3)
        threaded = e_step(model, observations, shift, workers=4, batch_size=3)

        assert serial.log_likelihood == threaded.log_likelihood
        np.testing.assert_array_equal(serial.transitions, threaded.transitions)
        np.testing.assert_array_equal(serial.second_moment, threaded.second_moment)

    def test_batched_statistics_match_single_sequences(self, three_phase_draw):
        """Test batched E-step statistics against per-sequence contributions."""
        corpus, _, _ = three_phase_draw
        events = list(corpus.events)[:10]
        observations = [e.values for e in events]
        shift = np.vstack(observations).mean(axis=0)
        model = init_k_bins(events, 3)

        batched = e_step(model, observations, shift, batch_size=4)
        singles = [SufficientStatistics.from_sequence(model, X, shift) for X in observations]
        expected = sum(singles[1:], singles[0])

        assert batched.n_sequences == 10
        assert batched.log_likelihood == pytest.approx(expected.log_likelihood, rel=1e-12)
        np.testing.assert_allclose(batched.first_state, expected.first_state, atol=1e-10)
        np.testing.assert_allclose(batched.transitions, expected.transitions, atol=1e-9)
        np.testing.assert_allclose(batched.occupancy, expected.occupancy, atol=1e-9)
        np.testing.assert_allclose(batched.first_moment, expected.first_moment, atol=1e-8)
        np.testing.assert_allclose(batched.second_moment, expected.second_moment, atol=1e-7)

    def test_sequence_batches_group_lengths(self):
        """Test batches split by length and size, keeping input order."""
        observations = [np.full((T, 1), float(i)) for i, T in enumerate([5, 5, 7, 5, 7])]

        batches = sequence_batches(observations, batch_size=2)

        assert [b.shape for b in batches] == [(2, 5, 1), (1, 5, 1), (2, 7, 1)]
        assert [b[:, 0, 0].tolist() for b in batches] == [[0.0, 1.0], [3.0], [2.0, 4.0]]

    def test_max_iters_bound(self, three_phase_draw):
        """Test that training stops after max_iters M-steps."""
        corpus, _, _ = three_phase_draw

        _, trace = fit(list(corpus.events)[:10], TrainingConfig(k=3, max_iters=2, rel_tol=1e-300))

        assert trace.iterations_run == 2
        assert len(trace.log_likelihoods) == 3
        assert not trace.converged

    def test_final_likelihood_matches_returned_model(self, three_phase_draw):
        """Test that the trace ends with the returned model's likelihood."""
        corpus, _, _ = three_phase_draw
        events = list(corpus.events)[:10]

        model, trace = fit(events, TrainingConfig(k=2, max_iters=8))

        total = sum(forward(model, e).log_likelihood for e in events)
        assert trace.final_log_likelihood == pytest.approx(total, rel=1e-12)

    def test_no_sequences(self):
        """Test that an empty training set is rejected."""
        with pytest.raises(InitializationError):
            fit([], TrainingConfig(k=1))


class TestTrainingTrace:
    """Tests for the trace monotonicity check."""

    def test_slack(self):
        """Test the 1e-8 absolute slack."""
        assert TrainingTrace(log_likelihoods=[-10.0, -10.0 - 5e-9, -9.0]).is_monotone()
        assert not TrainingTrace(log_likelihoods=[-10.0, -10.1]).is_monotone()


class TestFitGmm:
    """Tests for the frame-independent mixture EM."""

    def test_monotone_and_normalized(self, three_phase_draw):
        """Test the mixture trace and weights."""
        corpus, truth, _ = three_phase_draw

        model, trace = fit_gmm(list(corpus.events), TrainingConfig(k=3))

        assert isinstance(model, GmmModel)
        assert model.source == "independent"
        assert trace.is_monotone()
        assert float(np.sum(model.weights)) == pytest.approx(1.0, abs=1e-12)
        recovered, expected = _matched_means(model, truth)
        np.testing.assert_allclose(recovered, expected, rtol=0.05, atol=0.05)

    def test_initial_weights_are_label_shares(self):
        """Test that init_gmm weights follow the K-bins frame shares."""
        event = _event(np.arange(12, dtype=float).reshape(6, 2))

        model = init_gmm([event], TrainingConfig(k=2))

        np.testing.assert_allclose(model.weights, [0.5, 0.5])


class TestBic:
    """Tests for parameter counts, BIC scores and K scans."""

    @pytest.mark.parametrize(
        "K,D,kind,expected",
        [(1, 1, "hmm", 2), (3, 4, "hmm", 50), (3, 4, "gmm", 44), (2, 2, "hmm", 13)],
    )
    def test_parameter_counts(self, K, D, kind, expected):
        """Test n_p = (K-1) + K(K-1) + KD + KD(D+1)/2 (no transitions for gmm)."""
        assert count_parameters(K, D, kind) == expected

    def test_score_formula(self, three_phase_draw):
        """Test S_BIC = -log L + n_p/2 log(T_total)."""
        corpus, _, _ = three_phase_draw
        events = list(corpus.events)[:5]
        model, _ = fit(events, TrainingConfig(k=1))

        score, n_params = bic_score(model, events)

        log_likelihood = sum(forward(model, e).log_likelihood for e in events)
        assert n_params == count_parameters(1, 3)
        assert score == pytest.approx(-log_likelihood + 0.5 * n_params * math.log(200))

    def test_single_candidate(self, three_phase_draw):
        """Test that k_range = {1} selects 1."""
        corpus, _, _ = three_phase_draw

        scan = select_k(list(corpus.events)[:5], [1], TrainingConfig())

        assert scan.best_k == 1
        assert scan.best_model() is not None

    def test_selects_generating_order(self, three_phase_draw):
        """Test that the scan picks K=3 on three-state data."""
        corpus, _, _ = three_phase_draw

        scan = select_k(list(corpus.events), range(1, 5), TrainingConfig())

        assert scan.best_k == 3
        assert scan.scores[0] > scan.scores[2]
        assert scan.scores[3] > scan.scores[2]

    def test_failed_candidate_scored_infinite(self, three_phase_draw):
        """Test that an infeasible K is recorded instead of raised."""
        corpus, _, _ = three_phase_draw

        scan = select_k(list(corpus.events)[:5], [1, 50], TrainingConfig())

        assert scan.scores[1] == math.inf
        assert 50 in scan.failures
        assert scan.best_k == 1
        assert scan.n_params[1] == count_parameters(50, 3)

    def test_duplicate_candidates_identical(self, three_phase_draw):
        """Test that repeating K gives identical scores."""
        corpus, _, _ = three_phase_draw

        scan = select_k(list(corpus.events)[:8], [2, 2], TrainingConfig(init_method="k_means"))

        assert scan.scores[0] == scan.scores[1]

    def test_empty_range(self, three_phase_draw):
        """Test that an empty range is rejected."""
        corpus, _, _ = three_phase_draw

        with pytest.raises(ValueError):
            select_k(list(corpus.events), [], TrainingConfig())

