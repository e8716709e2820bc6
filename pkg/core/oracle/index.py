"""
加权学习 oracle
1. weighted_erm：全批量梯度下降训练加权逻辑回归，训练完成后做补假设检查（θ 与 -θ 取加权 0-1 误差较小者）
2. restricted_erm：只在群组成员上训练，近似该群组的最优分类器 h*_g
3. Oracle 协议：LogisticOracle（生产路径）和 TabularArgmaxOracle（显式假设列表上的穷举 argmax，验证路径）
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from typing import Dict, Any, List, Optional, Sequence

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section
from core.logger.index import setup_logger
from core.model.errors import OracleDivergedError, EmptyGroupError, ShapeError
from core.model.types import Dataset, Hypothesis, LinearHypothesis, TieBreak, Group
from core.model.utility import membership

LOGGER = setup_logger('Oracle')

# 回溯步长的下限，低于它说明已经走不动了
MIN_STEP = 1e-12


@dataclass
class OracleConfig:
    """加权逻辑回归的训练参数"""
    learning_rate: float = 0.1
    max_iters: int = 2000
    l2_reg: float = 1e-4
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate 必须大于 0，当前为 {self.learning_rate}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters 至少为 1，当前为 {self.max_iters}")
        if self.l2_reg < 0:
            raise ValueError(f"l2_reg 不能为负，当前为 {self.l2_reg}")
        if self.tol < 0:
            raise ValueError(f"tol 不能为负，当前为 {self.tol}")
        self.max_iters = int(self.max_iters)
        self.seed = int(self.seed)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'OracleConfig':
        data = data or {}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的 oracle 配置项：{sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def default(cls) -> 'OracleConfig':
        """读取 default.yaml 的 oracle 段"""
        return cls.from_dict(get_section('oracle'))


def _check_weights(weights: Sequence[float], n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != n:
        raise ShapeError(f"权重长度 {w.shape[0]} 与样本数 {n} 不一致")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("权重必须是非负有限值")
    if not np.any(w > 0):
        raise ValueError("权重不能全为 0")
    return w


def weighted_logistic_loss(theta: np.ndarray, ds: Dataset, weights: np.ndarray, l2_reg: float) -> float:
    """(1/n) Σ w_i·log(1 + exp(-y_i·x̃_i·θ)) + l2_reg·‖θ‖²"""
    margins = ds.labels * (ds.augmented @ theta)
    return float(np.mean(weights * np.logaddexp(0.0, -margins)) + l2_reg * np.dot(theta, theta))


def weighted_logistic_grad(theta: np.ndarray, ds: Dataset, weights: np.ndarray, l2_reg: float) -> np.ndarray:
    """weighted_logistic_loss 对 θ 的解析梯度"""
    margins = ds.labels * (ds.augmented @ theta)
    # σ(-m) 用 logaddexp 写，避免大间隔时溢出
    sigma = np.exp(-np.logaddexp(0.0, margins))
    coef = -(weights * sigma * ds.labels) / ds.n
    return ds.augmented.T @ coef + 2.0 * l2_reg * theta


def weighted_zero_one_error(h: Hypothesis, ds: Dataset, weights: Optional[Sequence[float]] = None) -> float:
    """Σ_i w_i·1[h(x_i) ≠ y_i]，不传权重时就是错误个数"""
    wrong = ~h.correct_on(ds)
    if weights is None:
        return float(np.count_nonzero(wrong))
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != ds.n:
        raise ShapeError(f"权重长度 {w.shape[0]} 与样本数 {ds.n} 不一致")
    return float(np.dot(w, wrong))


def weighted_erm(ds: Dataset, weights: Sequence[float], cfg: Optional[OracleConfig] = None) -> LinearHypothesis:
    """
    加权 ERM 的逻辑回归近似
    Args:
        ds: 数据集
        weights: 长度 n 的非负权重，不能全为 0
        cfg: 训练参数，默认读取配置文件
    Returns:
        θ 与 -θ 中加权 0-1 误差较小的线性假设（相等时保留 θ）
    """
    cfg = cfg or OracleConfig.default()
    raw = _check_weights(weights, ds.n)
    w = raw / raw.mean()  # 归一化到均值 1，学习率与权重尺度无关

    theta = np.zeros(ds.d + 1)
    loss = weighted_logistic_loss(theta, ds, w, cfg.l2_reg)
    if not np.isfinite(loss):
        raise OracleDivergedError(cfg.learning_rate)
    step = cfg.learning_rate
    iters = 0

    for iters in range(1, cfg.max_iters + 1):
        grad = weighted_logistic_grad(theta, ds, w, cfg.l2_reg)
        if not np.all(np.isfinite(grad)):
            raise OracleDivergedError(cfg.learning_rate)
        if np.linalg.norm(grad) < cfg.tol:
            break

        # 回溯：损失上升就把步长减半
        while True:
            candidate = theta - step * grad
            candidate_loss = weighted_logistic_loss(candidate, ds, w, cfg.l2_reg)
            if np.isfinite(candidate_loss) and candidate_loss <= loss:
                break
            step /= 2.0
            if step < MIN_STEP:
                break
        if step < MIN_STEP:
            break

        theta, loss = candidate, candidate_loss
        step = min(step * 2.0, cfg.learning_rate)

    LOGGER.debug(f"weighted_erm 结束：iters={iters}, loss={loss:.6f}")

    h = LinearHypothesis(theta)
    h_bar = h.complement()
    if weighted_zero_one_error(h_bar, ds, raw) < weighted_zero_one_error(h, ds, raw):
        return h_bar
    return h


def restricted_erm(ds: Dataset, g: Group, cfg: Optional[OracleConfig] = None) -> LinearHypothesis:
    """只在群组 g 的成员上训练（权重为成员指示）"""
    mask = membership(g, ds.n, ds)
    if not mask.any():
        raise EmptyGroupError("群组为空，无法训练 restricted_erm")
    return weighted_erm(ds, mask.astype(float), cfg)


class Oracle(ABC):
    """加权学习 oracle：给定权重返回一个确定性假设"""

    @abstractmethod
    def fit(self, ds: Dataset, weights: Sequence[float]) -> Hypothesis:
        pass

    def fit_group(self, ds: Dataset, g: Group) -> Hypothesis:
        mask = membership(g, ds.n, ds)
        if not mask.any():
            raise EmptyGroupError("群组为空，无法训练")
        return self.fit(ds, mask.astype(float))


class LogisticOracle(Oracle):
    """weighted_erm 的 oracle 包装"""

    def __init__(self, cfg: Optional[OracleConfig] = None):
        self.cfg = cfg or OracleConfig.default()

    def fit(self, ds: Dataset, weights: Sequence[float]) -> Hypothesis:
        return weighted_erm(ds, weights, self.cfg)


class TabularArgmaxOracle(Oracle):
    """在显式假设列表上穷举加权正确数的 argmax，并列按 tie_break 选下标"""

    def __init__(self, hypotheses: Sequence[Hypothesis], tie_break: TieBreak = TieBreak.LOWEST_INDEX):
        if not hypotheses:
            raise ShapeError("假设列表不能为空")
        self.hypotheses: List[Hypothesis] = list(hypotheses)
        self.tie_break = TieBreak(tie_break)

    def scores(self, ds: Dataset, weights: Sequence[float]) -> np.ndarray:
        w = np.asarray(weights, dtype=float).reshape(-1)
        return np.array([float(np.dot(w, h.correct_on(ds))) for h in self.hypotheses])

    def best_index(self, ds: Dataset, weights: Sequence[float]) -> int:
        scores = self.scores(ds, _check_weights(weights, ds.n))
        best = scores.max()
        tied = np.flatnonzero(scores >= best - 1e-12 * max(1.0, abs(best)))
        return int(tied[0] if self.tie_break == TieBreak.LOWEST_INDEX else tied[-1])

    def fit(self, ds: Dataset, weights: Sequence[float]) -> Hypothesis:
        return self.hypotheses[self.best_index(ds, weights)]
