"""
测试公共夹具
项目根目录加入 sys.path，与各模块的导入方式一致
"""

import sys
import os

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.data.synthetic import SyntheticSpec, synthetic_instance
from core.model.types import Dataset
from core.oracle.index import OracleConfig
from core.verify.fixtures import build_example


@pytest.fixture
def example1():
    return build_example('example1')


@pytest.fixture
def example2():
    return build_example('example2')


@pytest.fixture
def fig1():
    return build_example('fig1')


@pytest.fixture
def separable():
    """40 个点的线性可分实例，返回 (数据集, [分隔面, 补])"""
    return synthetic_instance(SyntheticSpec.separable_linear(40, 2, 3))


@pytest.fixture
def oracle_cfg():
    return OracleConfig(learning_rate=0.5, max_iters=500, l2_reg=1e-4, tol=1e-6)


@pytest.fixture
def noisy_dataset():
    """两个高斯团，标签带 10% 噪声"""
    rng = np.random.default_rng(11)
    n = 60
    labels = np.where(np.arange(n) < n // 2, 1, -1)
    features = rng.normal(size=(n, 2)) + labels.reshape(-1, 1) * 1.5
    flip = rng.random(n) < 0.1
    labels = np.where(flip, -labels, labels)
    return Dataset(features, labels, ('f0', 'f1'))


@pytest.fixture
def small_csv(tmp_path):
    """一个带类别列、数值列、敏感列的小 CSV，以及对应的预处理配置文件"""
    rng = np.random.default_rng(5)
    n = 50
    age = rng.integers(18, 70, size=n)
    priors = rng.integers(0, 10, size=n)
    degree = rng.choice(['F', 'M'], size=n)
    race = rng.choice(['A', 'B'], size=n)
    label = (priors + rng.normal(scale=1.0, size=n) > 4).astype(int)
    lines = ['age,priors_count,c_charge_degree,race,label']
    lines += [f'{a},{p},{d},{r},{y}' for a, p, d, r, y in zip(age, priors, degree, race, label)]
    csv_path = tmp_path / 'toy.csv'
    csv_path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    schema_path = tmp_path / 'toy.yaml'
    schema_path.write_text(
        'label_column: label\n'
        'positive_label: "1"\n'
        'drop_columns: [race]\n'
        'numeric_columns: [age, priors_count]\n'
        'categorical_columns: [c_charge_degree]\n'
        'split_ratio: 0.8\n'
        'seed: 3\n',
        encoding='utf-8')
    return str(csv_path), str(schema_path)


@pytest.fixture
def fast_config(tmp_path):
    """缩小轮数和步数的用户配置，命令行测试用"""
    path = tmp_path / 'fast.yaml'
    path.write_text(
        'oracle:\n'
        '  max_iters: 300\n'
        '  learning_rate: 0.5\n'
        'hpf:\n'
        '  rounds: 5\n'
        'befair:\n'
        '  rounds: 3\n'
        '  adv_restarts: 2\n'
        '  adv_steps: 50\n'
        '  em_iters: 1\n'
        'audit:\n'
        '  mae_restarts: 2\n'
        '  mae_em_iters: 1\n'
        '  curve_points: 10\n'
        'verify:\n'
        '  seeds: [0, 9]\n'
        '  max_n: 8\n'
        '  max_m: 4\n',
        encoding='utf-8')
    return str(path)
