import numpy as np
import pytest

from svbackend.dataset import Dataset, GeneratorConfig, Trial, ground_truth_subspace, synth_dataset
from svbackend.gplda import (
    PldaModel,
    ScoredTrial,
    ScoreSet,
    length_normalize,
    load_plda,
    marginal_loglik,
    read_scores,
    save_loglik_trace,
    save_plda,
    score_trial,
    score_trials,
    train_gplda,
    write_scores,
)

from conftest import make_dataset
from oracles import plda_pair_llr, stacked_marginal_loglik


def random_model(rng, k=3, q=2):
    mean = rng.standard_normal(k)
    u1 = 0.8 * rng.standard_normal((k, q))
    r = 0.4 * rng.standard_normal((k, k))
    sigma_w = r @ r.T + 0.3 * np.eye(k)
    lam = np.linalg.inv(sigma_w)
    return PldaModel(mean, u1, (lam + lam.T) / 2)


def labeled_gaussian_dataset(rng, n_speakers=12, sessions=4, dim=5):
    values, speakers = [], []
    for s in range(n_speakers):
        center = rng.standard_normal(dim)
        for _ in range(sessions):
            values.append(center + 0.6 * rng.standard_normal(dim))
            speakers.append(f"s{s:02d}")
    return make_dataset(np.array(values), speakers=speakers)


class TestLengthNormalize:
    def test_unit_vector_unchanged(self):
        v = np.zeros(4)
        v[1] = 1.0
        ds = make_dataset(v[None, :])
        np.testing.assert_array_equal(length_normalize(ds).matrix()[0], v)

    def test_scale_invariance(self, rng):
        u = rng.standard_normal(5)
        unit = u / np.linalg.norm(u)
        scaled = make_dataset((7.3 * unit)[None, :])
        np.testing.assert_allclose(length_normalize(scaled).matrix()[0], unit, atol=1e-12)

    def test_all_outputs_unit_norm(self, rng):
        ds = make_dataset(rng.standard_normal((20, 6)))
        norms = np.linalg.norm(length_normalize(ds).matrix(), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_zero_vector_names_utterance(self):
        ds = make_dataset(np.array([[1.0, 0.0], [0.0, 0.0]]), prefix="z")
        with pytest.raises(ValueError, match="z0001"):
            length_normalize(ds)

    def test_idempotent(self, rng):
        ds = length_normalize(make_dataset(rng.standard_normal((5, 4))))
        again = length_normalize(ds)
        np.testing.assert_allclose(again.matrix(), ds.matrix(), atol=1e-15)


class TestModel:
    def test_caches_consistent(self, rng):
        m = random_model(rng)
        np.testing.assert_allclose(m.sigma_within @ m.lambda_prec, np.eye(m.dim), atol=1e-10)
        np.testing.assert_allclose(m.sigma_between, m.u1 @ m.u1.T, atol=1e-10)
        np.testing.assert_allclose(
            m.sigma_total, m.sigma_within + m.sigma_between, atol=1e-12
        )

    def test_validation(self, rng):
        with pytest.raises(ValueError, match="symmetric"):
            PldaModel(np.zeros(2), np.zeros((2, 1)), np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="positive definite"):
            PldaModel(np.zeros(2), np.zeros((2, 1)), -np.eye(2))
        with pytest.raises(ValueError, match="eigenvoices"):
            PldaModel(np.zeros(2), np.zeros((2, 3)), np.eye(2))


class TestTraining:
    def test_marginal_loglik_matches_stacked_gaussian_oracle(self, rng):
        m = random_model(rng, k=3, q=1)
        groups = [rng.standard_normal((n, 3)) + m.mean for n in (1, 2, 3)]
        values = np.concatenate(groups)
        speakers = [f"s{i}" for i, g in enumerate(groups) for _ in range(len(g))]
        ds = make_dataset(values, speakers=speakers)
        ours = marginal_loglik(m, ds)
        ref = stacked_marginal_loglik(m.mean, m.sigma_between, m.sigma_within, groups)
        assert ours == pytest.approx(ref, abs=1e-9)

    def test_em_monotone_loglik(self, rng):
        ds = labeled_gaussian_dataset(rng)
        m = train_gplda(ds, q=3, iters=12, seed=4)
        trace = np.array(m.loglik_trace)
        assert len(trace) == 13
        assert np.all(np.diff(trace) >= -1e-8)

    def test_deterministic_given_seed(self, rng):
        ds = labeled_gaussian_dataset(rng)
        a = train_gplda(ds, q=2, iters=5, seed=7)
        b = train_gplda(ds, q=2, iters=5, seed=7)
        assert np.array_equal(a.u1, b.u1) and np.array_equal(a.lambda_prec, b.lambda_prec)
        c = train_gplda(ds, q=2, iters=5, seed=8)
        assert not np.array_equal(a.u1, c.u1)

    def test_q_bounds(self, rng):
        ds = labeled_gaussian_dataset(rng, dim=4)
        with pytest.raises(ValueError, match="at least one eigenvoice"):
            train_gplda(ds, q=0)
        with pytest.raises(ValueError, match="exceeds"):
            train_gplda(ds, q=5)

    def test_needs_labels_and_two_speakers(self, rng):
        ds = make_dataset(rng.standard_normal((4, 3)), speakers=["a", "a", None, "a"])
        with pytest.raises(ValueError, match="labels"):
            train_gplda(ds, q=1)
        ds2 = make_dataset(rng.standard_normal((4, 3)), speakers=["a"] * 4)
        with pytest.raises(ValueError, match="two speakers"):
            train_gplda(ds2, q=1)

    def test_recovers_generating_covariances(self):
        # generate exactly from the model family, refit, compare moments
        cfg = GeneratorConfig(
            dim=4, n_speakers=200, sessions_per_speaker=10, eigenvoice_dim=2,
            speaker_scale=1.3, channel_scale=0.8, seed=9,
        )
        ds, _ = synth_dataset(cfg)
        m = train_gplda(ds, q=2, iters=60, seed=0)
        u = ground_truth_subspace(cfg)
        true_between = cfg.speaker_scale**2 * (u @ u.T)
        true_within = cfg.channel_scale**2 * np.eye(4)
        assert (
            np.linalg.norm(m.sigma_between - true_between) / np.linalg.norm(true_between)
            <= 0.10
        )
        assert (
            np.linalg.norm(m.sigma_within - true_within) / np.linalg.norm(true_within)
            <= 0.10
        )
        # independent method-of-moments oracle: speaker-mean scatter minus
        # the within part explained by averaging n_s sessions
        mat = ds.matrix()
        means = np.array([mat[list(ds.index[s])].mean(axis=0) for s in ds.speakers])
        centered = means - means.mean(axis=0)
        moment_between = (
            centered.T @ centered / len(means)
            - m.sigma_within / cfg.sessions_per_speaker
        )
        assert (
            np.linalg.norm(m.sigma_between - moment_between) / np.linalg.norm(moment_between)
            <= 0.05
        )

    def test_full_q_matches_total_covariance(self, rng):
        ds = labeled_gaussian_dataset(rng, n_speakers=40, sessions=6, dim=4)
        m = train_gplda(ds, q=4, iters=40, seed=2)
        mat = ds.matrix()
        centered = mat - mat.mean(axis=0)
        total = centered.T @ centered / len(mat)
        assert np.linalg.norm(m.sigma_total - total) / np.linalg.norm(total) <= 0.10


class TestScoring:
    def test_zero_between_gives_zero_llr(self, rng):
        k = 3
        m = PldaModel(np.zeros(k), np.zeros((k, 1)), np.eye(k))
        for _ in range(5):
            assert abs(score_trial(m, rng.standard_normal(k), rng.standard_normal(k))) < 1e-10

    def test_symmetry(self, rng):
        m = random_model(rng)
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        assert score_trial(m, a, b) == pytest.approx(score_trial(m, b, a), abs=1e-10)

    def test_hand_model_matches_joint_gaussian_oracle(self, rng):
        m = random_model(rng, k=2, q=1)
        for _ in range(10):
            a, b = rng.standard_normal(2), rng.standard_normal(2)
            ref = plda_pair_llr(m.mean, m.sigma_between, m.sigma_within, a, b)
            assert score_trial(m, a, b) == pytest.approx(ref, abs=1e-8)

    def test_same_vector_dominates_far_pairs(self, rng):
        m = random_model(rng, k=4, q=2)
        w = rng.standard_normal(4)
        own = score_trial(m, w, w)
        far = [
            score_trial(m, w, w + 10.0 * rng.standard_normal(4)) for _ in range(1000)
        ]
        assert np.mean(far) < own

    def test_shift_of_data_and_mean_preserves_llr(self, rng):
        m = random_model(rng)
        shift = rng.standard_normal(3)
        shifted = PldaModel(m.mean + shift, m.u1, m.lambda_prec)
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        assert score_trial(m, a, b) == pytest.approx(
            score_trial(shifted, a + shift, b + shift), abs=1e-10
        )

    def test_dim_mismatch(self, rng):
        m = random_model(rng)
        with pytest.raises(ValueError, match="dimension"):
            score_trial(m, np.zeros(4), np.zeros(3))


class TestBatchScoring:
    def _setup(self, rng, n_enrol=10, n_test=10):
        m = random_model(rng, k=4, q=2)
        enrol = make_dataset(rng.standard_normal((n_enrol, 4)), prefix="e")
        test = make_dataset(rng.standard_normal((n_test, 4)), prefix="t")
        trials = [
            Trial(e.id, t.id, (i + j) % 3 == 0)
            for i, e in enumerate(enrol.items)
            for j, t in enumerate(test.items)
        ]
        return m, enrol, test, trials

    def test_full_cross_matches_looped_single_scoring(self, rng):
        m, enrol, test, trials = self._setup(rng)
        ss = score_trials(m, enrol, test, trials)
        e_map, t_map = enrol.by_id(), test.by_id()
        for st in ss:
            ref = score_trial(m, e_map[st.trial.enrol_id].values, t_map[st.trial.test_id].values)
            assert st.raw_llr == pytest.approx(ref, abs=1e-10)

    def test_empty_trials(self, rng):
        m, enrol, test, _ = self._setup(rng)
        assert len(score_trials(m, enrol, test, [])) == 0

    def test_unknown_ids_reported(self, rng):
        m, enrol, test, trials = self._setup(rng, n_enrol=2, n_test=2)
        with pytest.raises(ValueError, match="unknown enrol id 'nope'"):
            score_trials(m, enrol, test, [Trial("nope", test.items[0].id, True)])
        with pytest.raises(ValueError, match="unknown test id 'nope'"):
            score_trials(m, enrol, test, [Trial(enrol.items[0].id, "nope", True)])


class TestScoreSetAndPersistence:
    def test_scoreset_requires_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            ScoredTrial(Trial("a", "b", True), float("nan"))

    def test_values_and_normalized_guard(self):
        ss = ScoreSet((ScoredTrial(Trial("a", "b", True), 1.0),))
        with pytest.raises(ValueError, match="no normalized"):
            ss.values("normalized")
        ss2 = ss.with_normalized([2.0])
        assert ss2.values("normalized").tolist() == [2.0]
        assert ss2.values("raw").tolist() == [1.0]

    def test_plda_round_trip_exact(self, rng, tmp_path):
        ds = labeled_gaussian_dataset(rng)
        m = train_gplda(ds, q=2, iters=5, seed=1)
        path = tmp_path / "m.plda"
        save_plda(m, path)
        loaded = load_plda(path)
        assert np.array_equal(loaded.mean, m.mean)
        assert np.array_equal(loaded.u1, m.u1)
        assert np.array_equal(loaded.lambda_prec, m.lambda_prec)

    def test_loglik_trace_csv(self, rng, tmp_path):
        ds = labeled_gaussian_dataset(rng)
        m = train_gplda(ds, q=2, iters=3, seed=1)
        path = tmp_path / "trace.csv"
        save_loglik_trace(m, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,loglik"
        assert len(lines) == 1 + 4

    def test_scores_csv_round_trip(self, rng, tmp_path):
        trials = (
            ScoredTrial(Trial("e1", "t1", True), 1.25, 0.5),
            ScoredTrial(Trial("e2", "t2", False), -3.5, None),
        )
        ss = ScoreSet(trials)
        path = tmp_path / "scores.csv"
        write_scores(ss, path)
        loaded = read_scores(path)
        assert loaded == ss
