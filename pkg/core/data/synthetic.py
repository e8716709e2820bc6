"""
合成实例生成器，给验证模块和测试提供可复现的小规模实例
- random-tabular(n, m, seed)：m 个随机表格假设 + 它们的 m 个补假设
- separable-linear(n, d, seed)：带已知零误差线性分类器的数据集
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.model.types import Dataset, Hypothesis, LinearHypothesis, TabularHypothesis, sign_with_zero_positive


RANDOM_TABULAR = 'random-tabular'
SEPARABLE_LINEAR = 'separable-linear'


@dataclass(frozen=True)
class SyntheticSpec:
    """生成器描述，m 只对 random-tabular 有意义，d 只对 separable-linear 有意义"""
    kind: str
    n: int
    m: int = 1
    d: int = 2
    seed: int = 0

    @classmethod
    def random_tabular(cls, n: int, m: int, seed: int) -> 'SyntheticSpec':
        return cls(RANDOM_TABULAR, n=n, m=m, seed=seed)

    @classmethod
    def separable_linear(cls, n: int, d: int, seed: int) -> 'SyntheticSpec':
        return cls(SEPARABLE_LINEAR, n=n, d=d, seed=seed)


def tabular_dataset(n: int) -> Dataset:
    """表格实例的占位数据集：一列点下标，标签全为 +1（表格假设只看正确向量）"""
    return Dataset(np.arange(n, dtype=float).reshape(-1, 1), np.ones(n, dtype=int), ('index',))


def synthetic_instance(spec: SyntheticSpec) -> Tuple[Dataset, List[Hypothesis]]:
    """按 spec 生成 (数据集, 显式假设列表)"""
    if spec.n <= 0:
        raise ValueError("n 必须大于 0")
    rng = np.random.default_rng(int(spec.seed))

    if spec.kind == RANDOM_TABULAR:
        if spec.m <= 0:
            raise ValueError("m 必须大于 0")
        columns = rng.random((spec.n, spec.m)) < 0.5
        base: List[Hypothesis] = [TabularHypothesis(columns[:, j]) for j in range(spec.m)]
        return tabular_dataset(spec.n), base + [h.complement() for h in base]

    if spec.kind == SEPARABLE_LINEAR:
        if spec.d <= 0:
            raise ValueError("d 必须大于 0")
        features = rng.normal(size=(spec.n, spec.d))
        theta = rng.normal(size=spec.d + 1)
        augmented = np.hstack([features, np.ones((spec.n, 1))])
        labels = sign_with_zero_positive(augmented @ theta)
        separator = LinearHypothesis(theta)
        return Dataset(features, labels), [separator, separator.complement()]

    raise ValueError(f"未知的生成器：{spec.kind}")
