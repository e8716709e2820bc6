"""
加权学习 oracle
"""

import numpy as np
import pytest

from core.data.synthetic import tabular_dataset
from core.model.errors import EmptyGroupError, ShapeError
from core.model.types import ExplicitGroup, LinearHypothesis, TabularHypothesis, TieBreak
from core.oracle.index import (
    OracleConfig, LogisticOracle, TabularArgmaxOracle, weighted_erm, restricted_erm,
    weighted_logistic_loss, weighted_logistic_grad, weighted_zero_one_error,
)


class TestOracleConfig:

    @pytest.mark.parametrize('kwargs', [
        {'learning_rate': 0.0}, {'max_iters': 0}, {'l2_reg': -1.0}, {'tol': -1e-3},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            OracleConfig(**kwargs)

    def test_default_reads_config(self):
        cfg = OracleConfig.default()
        assert cfg.max_iters == 2000 and cfg.learning_rate == 0.1


class TestLogisticLoss:

    def test_gradient_matches_finite_difference(self, noisy_dataset):
        rng = np.random.default_rng(1)
        theta = rng.normal(size=3)
        w = rng.random(noisy_dataset.n) + 0.1
        grad = weighted_logistic_grad(theta, noisy_dataset, w, 0.01)
        eps = 1e-6
        numeric = np.zeros_like(theta)
        for j in range(theta.size):
            step = np.zeros_like(theta)
            step[j] = eps
            numeric[j] = (weighted_logistic_loss(theta + step, noisy_dataset, w, 0.01)
                          - weighted_logistic_loss(theta - step, noisy_dataset, w, 0.01)) / (2 * eps)
        np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-8)

    def test_large_margins_stay_finite(self, noisy_dataset):
        theta = np.array([1e4, 1e4, 0.0])
        w = np.ones(noisy_dataset.n)
        assert np.isfinite(weighted_logistic_loss(theta, noisy_dataset, w, 0.0))
        assert np.all(np.isfinite(weighted_logistic_grad(theta, noisy_dataset, w, 0.0)))


class TestWeightedErm:

    def test_separable_nearly_perfect(self, separable, oracle_cfg):
        ds, _ = separable
        h = weighted_erm(ds, np.ones(ds.n), oracle_cfg)
        assert weighted_zero_one_error(h, ds) <= 2

    def test_never_worse_than_complement(self, noisy_dataset, oracle_cfg):
        w = np.random.default_rng(2).random(noisy_dataset.n)
        h = weighted_erm(noisy_dataset, w, oracle_cfg)
        assert weighted_zero_one_error(h, noisy_dataset, w) <= weighted_zero_one_error(h.complement(), noisy_dataset, w)

    def test_label_flip_gives_complement_quality(self, noisy_dataset, oracle_cfg):
        w = np.ones(noisy_dataset.n)
        h = weighted_erm(noisy_dataset, w, oracle_cfg)
        flipped = noisy_dataset.with_labels(-noisy_dataset.labels)
        h_flip = weighted_erm(flipped, w, oracle_cfg)
        assert weighted_zero_one_error(h_flip, flipped) == pytest.approx(weighted_zero_one_error(h, noisy_dataset))

    def test_weight_scale_invariant(self, noisy_dataset, oracle_cfg):
        w = np.random.default_rng(3).random(noisy_dataset.n) + 0.05
        a = weighted_erm(noisy_dataset, w, oracle_cfg)
        b = weighted_erm(noisy_dataset, 4.0 * w, oracle_cfg)
        np.testing.assert_array_equal(a.theta, b.theta)

    @pytest.mark.parametrize('weights', [np.zeros(60), -np.ones(60), np.full(60, np.nan)])
    def test_rejects_bad_weights(self, noisy_dataset, oracle_cfg, weights):
        with pytest.raises(ValueError):
            weighted_erm(noisy_dataset, weights, oracle_cfg)

    def test_rejects_wrong_length(self, noisy_dataset, oracle_cfg):
        with pytest.raises(ShapeError):
            weighted_erm(noisy_dataset, np.ones(3), oracle_cfg)

    def test_restricted_to_group(self, noisy_dataset, oracle_cfg):
        g = ExplicitGroup.from_indices(noisy_dataset.n, range(10), 'first')
        h = restricted_erm(noisy_dataset, g, oracle_cfg)
        assert isinstance(h, LinearHypothesis)
        empty = ExplicitGroup(np.zeros(noisy_dataset.n, dtype=bool), 'empty')
        with pytest.raises(EmptyGroupError):
            restricted_erm(noisy_dataset, empty, oracle_cfg)

    def test_logistic_oracle_fit_group(self, separable, oracle_cfg):
        ds, _ = separable
        oracle = LogisticOracle(oracle_cfg)
        g = ExplicitGroup(np.ones(ds.n, dtype=bool), 'all')
        assert np.count_nonzero(~oracle.fit_group(ds, g).correct_on(ds)) <= 2


class TestTabularArgmaxOracle:

    def test_picks_weighted_argmax(self, example2):
        oracle = TabularArgmaxOracle(example2.hypotheses)
        # h1 = [T, T, F]，h2 = [F, T, T]
        assert oracle.best_index(example2.dataset, [1.0, 0.0, 0.0]) == 0
        assert oracle.best_index(example2.dataset, [0.0, 0.0, 1.0]) == 1
        assert oracle.best_index(example2.dataset, [0.0, 1.0, 5.0]) == 2

    def test_tie_break(self, example2):
        ds = example2.dataset
        low = TabularArgmaxOracle(example2.hypotheses, TieBreak.LOWEST_INDEX)
        high = TabularArgmaxOracle(example2.hypotheses, TieBreak.HIGHEST_INDEX)
        assert low.best_index(ds, np.ones(3)) == 0
        assert high.best_index(ds, np.ones(3)) == 2

    def test_fit_returns_hypothesis(self, example2):
        oracle = TabularArgmaxOracle(example2.hypotheses)
        assert oracle.fit(example2.dataset, [1.0, 0.0, 0.0]) is example2.hypotheses[0]

    def test_empty_list(self):
        with pytest.raises(ShapeError):
            TabularArgmaxOracle([])

    def test_scores(self):
        ds = tabular_dataset(2)
        oracle = TabularArgmaxOracle([TabularHypothesis([True, False]), TabularHypothesis([True, True])])
        np.testing.assert_allclose(oracle.scores(ds, [2.0, 3.0]), [2.0, 5.0])
