"""
审计指标：MAE、γ 扫描、前缀曲线
"""

import numpy as np
import pandas as pd
import pytest

from core.audit.index import (
    AuditConfig, overall_accuracy, mae_delta, mae_table, gamma_sweep, score_ordering,
    random_subset_ordering, prefix_sizes, cumulative_accuracy, lower_bound_curve, curve_to_csv,
)
from core.model.types import RandomizedClassifier
from core.oracle.index import TabularArgmaxOracle
from core.solver.befair import BefairConfig, ExhaustiveAdversary


@pytest.fixture
def x_only(fig1):
    return RandomizedClassifier.point_mass(fig1.hypotheses[0])


@pytest.fixture
def fig1_adversary(fig1):
    return ExhaustiveAdversary(list(fig1.groups.values()), fig1.hypotheses)


class TestAuditConfig:

    def test_rejects_delta_below_one(self):
        with pytest.raises(ValueError):
            AuditConfig(deltas=[0.9, 1.0])

    def test_default_deltas(self):
        assert AuditConfig.default().deltas[0] == 1.0


class TestMae:

    def test_overall_accuracy(self, fig1):
        D = RandomizedClassifier.point_mass(fig1.hypotheses[1])
        assert overall_accuracy(fig1.dataset, D) == pytest.approx(13 / 16)

    def test_x_only_on_fig1(self, fig1, x_only, fig1_adversary):
        value, report = mae_delta(fig1.dataset, x_only, 1.0, BefairConfig(), fig1_adversary)
        assert value == pytest.approx(2.0)
        assert report.group is fig1.groups['Yellow']

    def test_percent(self, fig1, x_only, fig1_adversary):
        value, _ = mae_delta(fig1.dataset, x_only, 1.0, BefairConfig(), fig1_adversary, percent=True)
        assert value == pytest.approx(12.5)

    def test_table(self, fig1, x_only, fig1_adversary):
        rows = mae_table(fig1.dataset, x_only, [1.0, 2.0], BefairConfig(), fig1_adversary)
        assert rows == [(1.0, pytest.approx(2.0)), (2.0, pytest.approx(2.0))]

    def test_ignores_configured_gamma(self, fig1, x_only, fig1_adversary):
        value, _ = mae_delta(fig1.dataset, x_only, 1.0, BefairConfig(gamma=0.5), fig1_adversary)
        assert value == pytest.approx(2.0)


class TestGammaSweep:

    def test_returns_smallest_feasible(self, fig1, fig1_adversary):
        learner = TabularArgmaxOracle([fig1.hypotheses[0]])
        sweep = gamma_sweep(fig1.dataset, 1.0, [0.0, 1.0, 2.0], BefairConfig(rounds=2), learner, fig1_adversary)
        assert sweep.gamma == 2.0
        assert sweep.result.converged
        assert sweep.tried == [(0.0, False), (1.0, False), (2.0, True)]

    def test_infeasible_grid(self, fig1, fig1_adversary):
        learner = TabularArgmaxOracle([fig1.hypotheses[0]])
        sweep = gamma_sweep(fig1.dataset, 1.0, [0.0, 0.5], BefairConfig(rounds=2), learner, fig1_adversary)
        assert sweep.gamma is None and sweep.result is None

    @pytest.mark.parametrize('grid', [[], [0.5, 0.1]])
    def test_grid_validated(self, fig1, grid):
        with pytest.raises(ValueError):
            gamma_sweep(fig1.dataset, 1.0, grid, BefairConfig())


class TestOrderings:

    def test_score_ordering_puts_errors_first(self, fig1):
        order = score_ordering(fig1.dataset, fig1.hypotheses[0])
        wrong = np.flatnonzero(~fig1.hypotheses[0].correct_on(fig1.dataset))
        np.testing.assert_array_equal(order[:wrong.size], wrong)

    def test_score_ordering_of_mixture(self, fig1):
        D = RandomizedClassifier.point_mass(fig1.hypotheses[1])
        np.testing.assert_array_equal(score_ordering(fig1.dataset, D), score_ordering(fig1.dataset, fig1.hypotheses[1]))

    def test_random_subset(self):
        a = random_subset_ordering(10, 0.5, seed=3)
        assert a.size == 5 and np.unique(a).size == 5
        np.testing.assert_array_equal(a, random_subset_ordering(10, 0.5, seed=3))
        with pytest.raises(ValueError):
            random_subset_ordering(10, 0.0, seed=3)

    def test_prefix_sizes(self):
        np.testing.assert_array_equal(prefix_sizes(5), [1, 2, 3, 4, 5])
        sizes = prefix_sizes(100, 10)
        assert sizes[0] == 1 and sizes[-1] == 100 and sizes.size == 10


class TestCurves:

    def test_cumulative_accuracy(self, fig1):
        D = RandomizedClassifier.point_mass(fig1.hypotheses[1])
        points = cumulative_accuracy(fig1.dataset, np.arange(16), D)
        assert len(points) == 16
        assert points[-1].value == pytest.approx(13 / 16)
        assert points[-1].subset_size == 16 and points[-1].x_index == 15

    def test_rejects_bad_ordering(self, fig1):
        D = RandomizedClassifier.point_mass(fig1.hypotheses[1])
        with pytest.raises(ValueError):
            cumulative_accuracy(fig1.dataset, [0, 0, 1], D)
        with pytest.raises(ValueError):
            cumulative_accuracy(fig1.dataset, [16], D)

    def test_lower_bound_curve(self, fig1):
        oracle = TabularArgmaxOracle(fig1.hypotheses)
        points = lower_bound_curve(fig1.dataset, np.arange(16), oracle=oracle)
        assert [p.subset_size for p in points] == list(range(1, 17))
        assert points[-1].value == pytest.approx((13 / 16) ** 2)
        assert all(p.value <= p.subset_size / 16 + 1e-12 for p in points)

    def test_csv_is_byte_stable(self, fig1, tmp_path):
        D = RandomizedClassifier.point_mass(fig1.hypotheses[1])
        points = cumulative_accuracy(fig1.dataset, np.arange(16), D, num_points=5)
        first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
        curve_to_csv(points, str(first))
        curve_to_csv(points, str(second))
        assert first.read_bytes() == second.read_bytes()
        frame = pd.read_csv(first)
        assert list(frame.columns) == ['x_index', 'value', 'subset_size']
        assert len(frame) == 5
