"""
审计指标
- mae_delta：用 BeFair 对手（代理目标 + EM）搜索 max_g err_g(h) - δ·err_g(h*_g)，启发式搜索，结果是真实值的下估计
- gamma_sweep：按升序尝试 γ，返回第一个收敛的虚拟博弈结果
- lower_bound_curve / cumulative_accuracy：按打分排序后的前缀曲线
- overall_accuracy：整体期望准确率
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Any, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section, worker_count
from core.logger.index import setup_logger
from core.model.types import Dataset, Hypothesis, RandomizedClassifier, ExplicitGroup
from core.model.utility import utility_randomized, utility_vector, group_error
from core.oracle.index import Oracle, LogisticOracle, OracleConfig
from core.solver.befair import (
    BefairConfig, Adversary, SurrogateAdversary, ViolationReport, FictitiousPlayResult, fictitious_play,
)

LOGGER = setup_logger('Audit')


@dataclass
class AuditConfig:
    deltas: List[float] = field(default_factory=lambda: [1.0, 1.05, 1.1, 1.15, 1.2, 1.25, 1.3])
    percent: bool = True
    curve_points: int = 100
    mae_restarts: int = 5
    mae_em_iters: int = 3

    def __post_init__(self):
        self.deltas = [float(d) for d in self.deltas]
        if any(d < 1 for d in self.deltas):
            raise ValueError(f"deltas 中的值都必须 ≥ 1，当前为 {self.deltas}")
        if int(self.curve_points) < 1:
            raise ValueError(f"curve_points 至少为 1，当前为 {self.curve_points}")
        self.curve_points = int(self.curve_points)
        self.mae_restarts = int(self.mae_restarts)
        self.mae_em_iters = int(self.mae_em_iters)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'AuditConfig':
        data = data or {}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的 audit 配置项：{sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def default(cls) -> 'AuditConfig':
        return cls.from_dict(get_section('audit'))


@dataclass(frozen=True)
class CurvePoint:
    x_index: int
    value: float
    subset_size: int


@dataclass
class GammaSweepResult:
    """gamma 为 None 表示网格中没有可行的 γ"""
    gamma: Optional[float]
    result: Optional[FictitiousPlayResult]
    tried: List[Tuple[float, bool]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# 准确率与 MAE
# ---------------------------------------------------------------------------

def overall_accuracy(ds: Dataset, D: RandomizedClassifier) -> float:
    return float(np.mean(utility_randomized(D, ds)))


def mae_delta(ds: Dataset, D: RandomizedClassifier, delta: float, cfg: Optional[BefairConfig] = None,
              adversary: Optional[Adversary] = None, percent: bool = False,
              audit_cfg: Optional[AuditConfig] = None) -> Tuple[float, ViolationReport]:
    """
    对固定的 D 运行对手（γ = 0），返回找到的最大真实违反和它的证据
    Args:
        ds: 审计所用数据集
        D: 被审计的随机分类器
        delta: δ ≥ 1
        cfg: 对手参数，默认取 befair 段，restarts / em_iters 用 audit 段的 mae_* 覆盖
        adversary: 默认 SurrogateAdversary
        percent: True 时返回 value·100/n
    """
    audit_cfg = audit_cfg or AuditConfig.default()
    base = cfg or BefairConfig.default()
    adv_cfg = replace(base, gamma=0.0, delta=float(delta),
                      adv_restarts=audit_cfg.mae_restarts, em_iters=audit_cfg.mae_em_iters)
    adversary = adversary or SurrogateAdversary(LogisticOracle(adv_cfg.oracle_cfg))

    t = 1.0 - utility_randomized(D, ds)
    report = adversary.best_response(ds, t, adv_cfg)
    value = report.violation * 100.0 / ds.n if percent else report.violation
    return float(value), report


def mae_table(ds: Dataset, D: RandomizedClassifier, deltas: Sequence[float], cfg: Optional[BefairConfig] = None,
              adversary: Optional[Adversary] = None, percent: bool = False,
              audit_cfg: Optional[AuditConfig] = None) -> List[Tuple[float, float]]:
    """每个 δ 一行 (δ, MAE_δ)"""
    return [(float(d), mae_delta(ds, D, d, cfg, adversary, percent, audit_cfg)[0]) for d in deltas]


def gamma_sweep(ds: Dataset, delta: float, gamma_grid: Sequence[float], cfg: Optional[BefairConfig] = None,
                oracle: Optional[Oracle] = None, adversary: Optional[Adversary] = None) -> GammaSweepResult:
    """按升序尝试 γ，返回最小的可行 γ 及其模型；网格无可行值时 gamma 为 None"""
    grid = [float(g) for g in gamma_grid]
    if not grid:
        raise ValueError("gamma 网格不能为空")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"gamma 网格必须升序：{grid}")

    base = cfg or BefairConfig.default()
    tried: List[Tuple[float, bool]] = []
    for gamma in grid:
        result = fictitious_play(ds, replace(base, gamma=gamma, delta=float(delta)), oracle, adversary)
        tried.append((gamma, result.converged))
        LOGGER.info(f"γ={gamma:g}：{'收敛' if result.converged else '未收敛'}")
        if result.converged:
            return GammaSweepResult(gamma, result, tried)
    return GammaSweepResult(None, None, tried)


# ---------------------------------------------------------------------------
# 排序与曲线
# ---------------------------------------------------------------------------

def _margins(h: Hypothesis, ds: Dataset) -> np.ndarray:
    margin = getattr(h, 'margin', None)
    if margin is None:
        return np.where(utility_vector(h, ds), 1.0, -1.0)
    return np.asarray(margin(ds), dtype=float)


def score_ordering(ds: Dataset, scorer: Any) -> np.ndarray:
    """按真实标签上的带符号间隔升序排列（越靠后越确信分对），并列按下标"""
    if isinstance(scorer, RandomizedClassifier):
        scores = np.zeros(ds.n)
        for h, p in scorer.atoms():
            scores += p * _margins(h, ds)
    else:
        scores = _margins(scorer, ds)
    return np.argsort(scores, kind='stable')


def random_subset_ordering(n: int, fraction: float, seed: int) -> np.ndarray:
    """随机抽取 round(fraction·n) 个点并随机排列"""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction 必须在 (0, 1] 之间，当前为 {fraction}")
    size = max(1, int(round(fraction * n)))
    return np.random.default_rng(int(seed)).permutation(n)[:size]


def _check_ordering(ordering: Sequence[int], n: int) -> np.ndarray:
    order = np.asarray(ordering, dtype=int).reshape(-1)
    if order.size == 0:
        raise ValueError("排序不能为空")
    if order.min() < 0 or order.max() >= n or np.unique(order).size != order.size:
        raise ValueError("排序必须是不重复的合法下标")
    return order


def prefix_sizes(length: int, num_points: Optional[int] = None) -> np.ndarray:
    """要评估的前缀长度；num_points 不小于 length 时取全部前缀，总是包含完整前缀"""
    if num_points is None or length <= num_points:
        return np.arange(1, length + 1)
    return np.unique(np.linspace(1, length, num_points).round().astype(int))


def cumulative_accuracy(ds: Dataset, ordering: Sequence[int], D: RandomizedClassifier,
                        num_points: Optional[int] = None) -> List[CurvePoint]:
    order = _check_ordering(ordering, ds.n)
    u = utility_randomized(D, ds)[order]
    sums = np.cumsum(u)
    return [CurvePoint(int(k - 1), float(sums[k - 1] / k), int(k)) for k in prefix_sizes(order.size, num_points)]


def lower_bound_curve(ds: Dataset, ordering: Sequence[int], cfg: Optional[OracleConfig] = None,
                      oracle: Optional[Oracle] = None, num_points: Optional[int] = None) -> List[CurvePoint]:
    """
    每个前缀 g 输出 α·û_g²，α = |g|/n，û_g 是 restricted_erm 在 g 上的准确率；
    每个点一次 oracle 调用，前缀之间相互独立，用线程池并行
    """
    order = _check_ordering(ordering, ds.n)
    oracle = oracle or LogisticOracle(cfg)

    def point(k: int) -> CurvePoint:
        g = ExplicitGroup.from_indices(ds.n, order[:k])
        h = oracle.fit_group(ds, g)
        u_hat = 1.0 - group_error(g, utility_vector(h, ds).astype(float), ds) / k
        alpha = k / ds.n
        return CurvePoint(int(k - 1), float(alpha * u_hat ** 2), int(k))

    sizes = [int(k) for k in prefix_sizes(order.size, num_points)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(point, sizes))


def curve_to_frame(points: Sequence[CurvePoint]) -> pd.DataFrame:
    return pd.DataFrame([[p.x_index, p.value, p.subset_size] for p in points],
                        columns=['x_index', 'value', 'subset_size'])


def curve_to_csv(points: Sequence[CurvePoint], path: str) -> None:
    """固定浮点格式，保证重复运行字节一致"""
    curve_to_frame(points).to_csv(path, index=False, float_format='%.10f')
