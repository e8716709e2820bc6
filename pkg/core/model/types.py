"""
公平分类相关的核心类型定义和枚举
数据集、确定性假设、随机分类器、群组都是构造后不可变的对象，可以在多个线程间只读共享
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Any, List, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.model.errors import ShapeError


PROB_SUM_TOL = 1e-9


class TieBreak(Enum):
    """并列时按假设下标选择"""
    LOWEST_INDEX = 'lowest_index'
    HIGHEST_INDEX = 'highest_index'


class StepRule(Enum):
    """镜像下降步长规则"""
    FIXED = 'fixed'
    LINE_SEARCH = 'line-search'


class GreedyOracleKind(Enum):
    """Greedy 每一轮 argmax 的来源"""
    EXHAUSTIVE_TABULAR = 'exhaustive_tabular'
    WEIGHTED_ERM = 'weighted_erm'


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def sign_with_zero_positive(values: np.ndarray) -> np.ndarray:
    """sign(0) = +1 的符号函数，假设预测和线性群组成员判定共用"""
    return np.where(values >= 0, 1, -1)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    数据集：n 行 d 列特征 + {-1,+1} 标签
    augmented 在特征后面追加常数 1 列作为偏置，线性假设和线性群组都作用在 augmented 上
    """
    features: np.ndarray
    labels: np.ndarray
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise ShapeError(f"特征必须是二维矩阵，当前维度：{features.ndim}")
        n, d = features.shape
        if n < 1 or d < 1:
            raise ShapeError(f"数据集至少需要 1 行 1 列，当前形状：{features.shape}")
        if not np.all(np.isfinite(features)):
            raise ShapeError("特征中存在非有限值")

        labels = np.array(self.labels).reshape(-1)
        if labels.shape[0] != n:
            raise ShapeError(f"标签长度 {labels.shape[0]} 与样本数 {n} 不一致")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ShapeError("标签必须取值于 {-1, +1}")
        labels = labels.astype(int)

        names = tuple(self.feature_names) if self.feature_names else tuple(f"x{j}" for j in range(d))
        if len(names) != d:
            raise ShapeError(f"特征名数量 {len(names)} 与列数 {d} 不一致")

        augmented = np.hstack([features, np.ones((n, 1))])

        object.__setattr__(self, 'features', _readonly(features))
        object.__setattr__(self, 'labels', _readonly(labels))
        object.__setattr__(self, 'feature_names', names)
        object.__setattr__(self, '_augmented', _readonly(augmented))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def augmented(self) -> np.ndarray:
        """n × (d+1)，最后一列恒为 1"""
        return self._augmented

    def with_labels(self, labels: np.ndarray) -> 'Dataset':
        return Dataset(self.features, labels, self.feature_names)


class Hypothesis(ABC):
    """确定性分类器 h ∈ H"""

    kind: str = ''

    @abstractmethod
    def correct_on(self, ds: Dataset) -> np.ndarray:
        """长度 n 的布尔向量，第 i 项表示 h 是否分对第 i 个点"""

    @abstractmethod
    def complement(self) -> 'Hypothesis':
        """翻转所有预测得到的补假设"""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass


@dataclass(frozen=True, eq=False)
class LinearHypothesis(Hypothesis):
    """线性分类器：sign(x̃·θ)，sign(0) = +1"""
    theta: np.ndarray
    kind: str = field(default='linear', init=False)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.size < 1:
            raise ShapeError("theta 不能为空")
        if not np.all(np.isfinite(theta)):
            raise ShapeError("theta 中存在非有限值")
        object.__setattr__(self, 'theta', _readonly(theta))

    def _check(self, ds: Dataset) -> None:
        if self.theta.shape[0] != ds.d + 1:
            raise ShapeError(f"theta 长度 {self.theta.shape[0]} 与数据集 d+1={ds.d + 1} 不一致")

    def scores(self, ds: Dataset) -> np.ndarray:
        self._check(ds)
        return ds.augmented @ self.theta

    def predict(self, ds: Dataset) -> np.ndarray:
        return sign_with_zero_positive(self.scores(ds))

    def margin(self, ds: Dataset) -> np.ndarray:
        """真实标签上的带符号间隔 y·x̃·θ，越大越确信分对"""
        return ds.labels * self.scores(ds)

    def correct_on(self, ds: Dataset) -> np.ndarray:
        return self.predict(ds) == ds.labels

    def complement(self) -> 'LinearHypothesis':
        return LinearHypothesis(-self.theta)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "linear", "theta": [float(v) for v in self.theta]}


@dataclass(frozen=True, eq=False)
class TabularHypothesis(Hypothesis):
    """显式给出每个点是否分对的假设，只对构造它的数据集有效"""
    correct: np.ndarray
    kind: str = field(default='tabular', init=False)

    def __post_init__(self):
        correct = np.array(self.correct).reshape(-1).astype(bool)
        object.__setattr__(self, 'correct', _readonly(correct))

    def correct_on(self, ds: Dataset) -> np.ndarray:
        if self.correct.shape[0] != ds.n:
            raise ShapeError(f"表格假设长度 {self.correct.shape[0]} 与样本数 {ds.n} 不一致")
        return self.correct.copy()

    def predict(self, ds: Dataset) -> np.ndarray:
        correct = self.correct_on(ds)
        return np.where(correct, ds.labels, -ds.labels)

    def margin(self, ds: Dataset) -> np.ndarray:
        return np.where(self.correct_on(ds), 1.0, -1.0)

    def complement(self) -> 'TabularHypothesis':
        return TabularHypothesis(~self.correct)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "tabular", "correct": [bool(v) for v in self.correct]}


class Group(ABC):
    """群组 g ⊆ N"""

    @abstractmethod
    def members(self, ds: Dataset) -> np.ndarray:
        """长度 n 的布尔成员向量"""

    def size(self, ds: Dataset) -> int:
        return int(np.count_nonzero(self.members(ds)))

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass


@dataclass(frozen=True, eq=False)
class LinearGroup(Group):
    """线性可分群组：i ∈ g 当且仅当 x̃_i·θ_g ≥ 0（与假设共用 sign(0) = +1）"""
    theta_g: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta_g, dtype=float).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise ShapeError("theta_g 中存在非有限值")
        object.__setattr__(self, 'theta_g', _readonly(theta))

    def members(self, ds: Dataset) -> np.ndarray:
        if self.theta_g.shape[0] != ds.d + 1:
            raise ShapeError(f"theta_g 长度 {self.theta_g.shape[0]} 与数据集 d+1={ds.d + 1} 不一致")
        return sign_with_zero_positive(ds.augmented @ self.theta_g) > 0

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "linear", "theta_g": [float(v) for v in self.theta_g]}


@dataclass(frozen=True, eq=False)
class ExplicitGroup(Group):
    """显式下标掩码表示的群组"""
    mask: np.ndarray
    name: str = ''

    def __post_init__(self):
        mask = np.array(self.mask).reshape(-1).astype(bool)
        object.__setattr__(self, 'mask', _readonly(mask))

    @classmethod
    def from_indices(cls, n: int, indices: Sequence[int], name: str = '') -> 'ExplicitGroup':
        mask = np.zeros(n, dtype=bool)
        mask[np.asarray(list(indices), dtype=int)] = True
        return cls(mask, name)

    def members(self, ds: Dataset) -> np.ndarray:
        if self.mask.shape[0] != ds.n:
            raise ShapeError(f"群组掩码长度 {self.mask.shape[0]} 与样本数 {ds.n} 不一致")
        return self.mask.copy()

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": "explicit", "mask": [bool(v) for v in self.mask]}
        if self.name:
            data["name"] = self.name
        return data


@dataclass(frozen=True, eq=False)
class RandomizedClassifier:
    """Δ(H) 中的随机分类器：有限支撑 + 概率向量"""
    support: Tuple[Hypothesis, ...]
    probs: np.ndarray

    def __post_init__(self):
        support = tuple(self.support)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if not support:
            raise ShapeError("随机分类器的支撑不能为空")
        if probs.shape[0] != len(support):
            raise ShapeError(f"概率长度 {probs.shape[0]} 与支撑大小 {len(support)} 不一致")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ShapeError("概率必须是非负有限值")
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ShapeError(f"概率之和必须为 1，当前为 {total:.12f}")
        object.__setattr__(self, 'support', support)
        object.__setattr__(self, 'probs', _readonly(probs))

    @classmethod
    def point_mass(cls, hypothesis: Hypothesis) -> 'RandomizedClassifier':
        return cls((hypothesis,), np.ones(1))

    @classmethod
    def uniform(cls, hypotheses: Sequence[Hypothesis]) -> 'RandomizedClassifier':
        m = len(hypotheses)
        return cls(tuple(hypotheses), np.full(m, 1.0 / m) if m else np.zeros(0))

    @classmethod
    def from_weights(cls, hypotheses: Sequence[Hypothesis], weights: Sequence[float]) -> 'RandomizedClassifier':
        """按非负权重归一化，调用方保证权重和大于 0"""
        w = np.asarray(weights, dtype=float)
        return cls(tuple(hypotheses), w / w.sum())

    def __len__(self) -> int:
        return len(self.support)

    def atoms(self) -> List[Tuple[Hypothesis, float]]:
        """概率为正的 (假设, 概率) 列表"""
        return [(h, float(p)) for h, p in zip(self.support, self.probs) if p > 0]
