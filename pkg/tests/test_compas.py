"""
compas 真实数据上的验收检查；数据文件不在仓库里，先用 data-collector 下载
模型在模块级 fixture 里只训练一次，参数全部来自 config/default.yaml
"""

import os

import numpy as np
import pytest

from core.config.index import PROJECT_ROOT
from core.data.index import PreprocessConfig, load_csv
from core.model.types import RandomizedClassifier
from core.oracle.index import OracleConfig, weighted_erm
from core.solver.befair import BefairConfig, fictitious_play
from core.solver.hpf import HpfConfig, run_hpf
from core.audit.index import (
    AuditConfig, overall_accuracy, mae_delta, score_ordering, cumulative_accuracy, lower_bound_curve,
)


COMPAS_CSV = os.path.join(PROJECT_ROOT, 'data', 'compas-scores-two-years.csv')

# γ 以错误个数计，取训练集大小的 1%
GAMMA_SHARE = 0.01

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(not os.path.exists(COMPAS_CSV), reason="data/compas-scores-two-years.csv 不存在"),
]


@pytest.fixture(scope='module')
def compas():
    config = PreprocessConfig.from_file(os.path.join(PROJECT_ROOT, 'config', 'datasets', 'compas.yaml'))
    return load_csv(COMPAS_CSV, config)


@pytest.fixture(scope='module')
def models(compas):
    train, _ = compas
    erm = RandomizedClassifier.point_mass(weighted_erm(train, np.ones(train.n), OracleConfig.default()))
    trained = {'erm': erm, 'hpf': run_hpf(train, HpfConfig.default())}
    for delta in (1.0, 1.1):
        cfg = BefairConfig.default()
        cfg.delta = delta
        cfg.gamma = GAMMA_SHARE * train.n
        trained[f'befair_{delta}'] = fictitious_play(train, cfg).classifier
    return trained


def test_filtered_size_and_features(compas):
    train, test = compas
    assert 6000 <= train.n + test.n <= 6200
    assert train.n == pytest.approx(0.8 * (train.n + test.n), abs=1)
    assert not any(name.startswith(('race', 'sex')) for name in train.feature_names)
    assert train.d == test.d


def test_erm_beats_majority(compas, models):
    _, test = compas
    positive = float(np.mean(test.labels == 1))
    majority = max(positive, 1 - positive)
    assert overall_accuracy(test, models['erm']) >= majority


@pytest.mark.parametrize('name, expected', [
    ('erm', 0.75), ('hpf', 0.64), ('befair_1.0', 0.70), ('befair_1.1', 0.71),
])
def test_test_accuracy(compas, models, name, expected):
    _, test = compas
    assert overall_accuracy(test, models[name]) == pytest.approx(expected, abs=0.05)


def test_befair_mae_not_above_erm(compas, models):
    train, _ = compas
    for delta in AuditConfig.default().deltas:
        befair, _ = mae_delta(train, models['befair_1.0'], delta, percent=True)
        erm, _ = mae_delta(train, models['erm'], delta, percent=True)
        assert befair <= erm + 1e-9, f"δ={delta}: BeFair {befair:.3f}% > ERM {erm:.3f}%"


def test_befair_mae_at_1_1_below_three_percent(compas, models):
    train, _ = compas
    value, report = mae_delta(train, models['befair_1.1'], 1.1, percent=True)
    assert value < 3.0, report.to_dict()


def test_hpf_above_lower_bound(compas, models):
    _, test = compas
    D = models['hpf']
    ordering = score_ordering(test, D)
    points = AuditConfig.default().curve_points
    achieved = [p.value for p in cumulative_accuracy(test, ordering, D, num_points=points)]
    bound = [p.value for p in lower_bound_curve(test, ordering, OracleConfig.default(), num_points=points)]
    assert len(achieved) == len(bound)
    above = np.mean(np.asarray(achieved) >= np.asarray(bound))
    assert above >= 0.95
