"""
效用与误差代数
u_i(h) = 1[h(x_i) = y_i]，随机分类器的效用是支撑上的期望；群组效用是均值，群组误差是计数
以及假设 / 随机分类器 / 群组的 JSON 编解码
"""

import json
from typing import Dict, Any, Optional, Sequence, Union

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.model.errors import ShapeError, EmptyGroupError, DataFormatError
from core.model.types import (
    Dataset, Hypothesis, LinearHypothesis, TabularHypothesis,
    Group, LinearGroup, ExplicitGroup, RandomizedClassifier,
)


GroupLike = Union[Group, np.ndarray]


def utility_vector(h: Hypothesis, ds: Dataset) -> np.ndarray:
    """h 在每个点上是否分对（布尔向量）"""
    return h.correct_on(ds)


def utility_randomized(D: RandomizedClassifier, ds: Dataset) -> np.ndarray:
    """u_i(D) = Σ_j p_j · u_i(h_j)，取值 [0, 1]"""
    u = np.zeros(ds.n)
    for h, p in zip(D.support, D.probs):
        if p > 0:
            u += p * utility_vector(h, ds)
    return np.clip(u, 0.0, 1.0)


def utility_matrix(ds: Dataset, hypotheses: Sequence[Hypothesis]) -> np.ndarray:
    """n × m 布尔矩阵，第 j 列是第 j 个假设的效用向量"""
    if not hypotheses:
        raise ShapeError("假设列表不能为空")
    return np.column_stack([utility_vector(h, ds) for h in hypotheses])


def membership(g: GroupLike, u_len: int, ds: Optional[Dataset] = None) -> np.ndarray:
    """把 Group 或布尔掩码统一成布尔向量"""
    if isinstance(g, ExplicitGroup):
        mask = g.mask
    elif isinstance(g, Group):
        if ds is None:
            raise ShapeError("线性群组需要数据集才能判定成员")
        mask = g.members(ds)
    else:
        mask = np.asarray(g).reshape(-1).astype(bool)
    if mask.shape[0] != u_len:
        raise ShapeError(f"群组掩码长度 {mask.shape[0]} 与效用向量长度 {u_len} 不一致")
    return mask


def group_utility(g: GroupLike, u: np.ndarray, ds: Optional[Dataset] = None) -> float:
    """u_g = (1/|g|) Σ_{i∈g} u_i，空群组抛 EmptyGroupError"""
    u = np.asarray(u, dtype=float)
    mask = membership(g, u.shape[0], ds)
    size = int(np.count_nonzero(mask))
    if size == 0:
        raise EmptyGroupError("群组为空，无法计算群组效用")
    return float(u[mask].mean())


def group_error(g: GroupLike, u: np.ndarray, ds: Optional[Dataset] = None) -> float:
    """err_g = Σ_{i∈g} (1 - u_i)，是计数不是均值；空群组返回 0"""
    u = np.asarray(u, dtype=float)
    mask = membership(g, u.shape[0], ds)
    return float(np.sum(1.0 - u[mask]))


def complement(h: Hypothesis) -> Hypothesis:
    """补假设 h̄：线性假设取反 θ，表格假设取反正确向量"""
    return h.complement()


# ---------------------------------------------------------------------------
# JSON 编解码
# ---------------------------------------------------------------------------

def hypothesis_from_dict(data: Dict[str, Any]) -> Hypothesis:
    kind = data.get('kind')
    if kind == 'linear':
        return LinearHypothesis(np.asarray(data['theta'], dtype=float))
    if kind == 'tabular':
        return TabularHypothesis(np.asarray(data['correct'], dtype=bool))
    raise DataFormatError(f"未知的假设类型：{kind}")


def group_from_dict(data: Dict[str, Any]) -> Group:
    kind = data.get('kind')
    if kind == 'linear':
        return LinearGroup(np.asarray(data['theta_g'], dtype=float))
    if kind == 'explicit':
        return ExplicitGroup(np.asarray(data['mask'], dtype=bool), data.get('name', ''))
    raise DataFormatError(f"未知的群组类型：{kind}")


def classifier_to_dict(D: RandomizedClassifier) -> Dict[str, Any]:
    return {
        "support": [h.to_dict() for h in D.support],
        "probs": [float(p) for p in D.probs],
    }


def classifier_from_dict(data: Dict[str, Any]) -> RandomizedClassifier:
    try:
        support = [hypothesis_from_dict(item) for item in data['support']]
        probs = np.asarray(data['probs'], dtype=float)
    except (KeyError, TypeError) as e:
        raise DataFormatError(f"随机分类器 JSON 缺少字段：{e}")
    return RandomizedClassifier(tuple(support), probs)


def save_classifier(D: RandomizedClassifier, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(classifier_to_dict(D), f, ensure_ascii=False, indent=2)


def load_classifier(path: str) -> RandomizedClassifier:
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"模型文件不是合法 JSON：{path}: {e}")
    # 允许直接保存单个假设
    if 'support' not in data:
        return RandomizedClassifier.point_mass(hypothesis_from_dict(data))
    return classifier_from_dict(data)
