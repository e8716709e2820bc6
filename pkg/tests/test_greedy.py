"""
Greedy 分类器
"""

import numpy as np
import pytest

from core.data.synthetic import tabular_dataset
from core.model.errors import StuckGreedyError
from core.model.types import TabularHypothesis, TieBreak
from core.model.utility import utility_randomized, group_utility
from core.solver.greedy import GreedyConfig, run_greedy, run_greedy_detailed, greedy_bound, train
from core.solver.index import TrainRequest
from core.verify.fixtures import build_example


class TestRunGreedy:

    def test_example1_lowest_index(self, example1):
        D = run_greedy(example1.dataset, example1.hypotheses, GreedyConfig(tie_break='lowest_index'))
        U = example1.utility.astype(float)
        np.testing.assert_allclose(utility_randomized(D, example1.dataset), 0.75 * U[:, 0] + 0.25 * U[:, 1])

    @pytest.mark.parametrize('k', [3, 4, 5])
    def test_example3_highest_index_is_tight(self, k):
        fixture = build_example('example3', k)
        D = run_greedy(fixture.dataset, fixture.hypotheses, GreedyConfig(tie_break='highest_index'))
        u = utility_randomized(D, fixture.dataset)
        assert group_utility(fixture.groups['S'], u) == pytest.approx(1.0 / k, abs=1e-12)

    def test_example3_round_sizes(self):
        fixture = build_example('example3', 3)
        _, trace = run_greedy_detailed(fixture.dataset, fixture.hypotheses, GreedyConfig(tie_break='highest_index'))
        assert [int(c.sum()) for c in trace.covered] == [3, 2, 1]

    def test_covered_sets_partition_points(self, example2):
        _, trace = run_greedy_detailed(example2.dataset, example2.hypotheses, GreedyConfig())
        stacked = np.vstack(trace.covered)
        np.testing.assert_array_equal(stacked.sum(axis=0), 1)

    def test_stuck(self):
        ds = tabular_dataset(2)
        with pytest.raises(StuckGreedyError):
            run_greedy(ds, [TabularHypothesis([True, False])], GreedyConfig())

    def test_oracle_path(self, noisy_dataset, oracle_cfg):
        D, trace = run_greedy_detailed(noisy_dataset, None, GreedyConfig(oracle_cfg=oracle_cfg))
        assert D.probs.sum() == pytest.approx(1.0)
        assert sum(int(c.sum()) for c in trace.covered) == noisy_dataset.n

    def test_exhaustive_needs_list(self, noisy_dataset):
        with pytest.raises(ValueError):
            run_greedy(noisy_dataset, None, GreedyConfig(oracle='exhaustive_tabular'))

    def test_config_enums(self):
        cfg = GreedyConfig(tie_break='highest_index')
        assert cfg.tie_break == TieBreak.HIGHEST_INDEX


class TestGreedyBound:

    @pytest.mark.parametrize('alpha, expected', [(1.0, 1.0), (0.5, 0.25), (0.75, 0.541667)])
    def test_values(self, alpha, expected):
        assert greedy_bound(alpha) == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize('alpha', [0.0, -0.1, 1.5])
    def test_range(self, alpha):
        with pytest.raises(ValueError):
            greedy_bound(alpha)


def test_train_summary(noisy_dataset):
    request = TrainRequest(config={'oracle': {'max_iters': 200, 'learning_rate': 0.5}}, train=noisy_dataset)
    outcome = train(request)
    assert sum(outcome.summary['covered']) == noisy_dataset.n
    assert outcome.summary['rounds'] == len(outcome.classifier)
