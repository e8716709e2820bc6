"""
Greedy 分类器
S_1 = N；每一轮选在剩余点 S_r 上分对最多的假设 h*_r，T_r 为它在 S_r 中分对的点，
p_r = |T_r| / n，S_{r+1} = S_r \\ T_r，直到 S 为空。T_r 构成 N 的划分，所以 Σ p_r = 1
"""

from dataclasses import dataclass, field, fields
from typing import Dict, Any, List, Optional, Sequence, Tuple, Union

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section
from core.logger.index import setup_logger
from core.model.errors import StuckGreedyError, ShapeError
from core.model.types import Dataset, Hypothesis, RandomizedClassifier, TieBreak, GreedyOracleKind
from core.oracle.index import Oracle, OracleConfig, LogisticOracle, TabularArgmaxOracle
from core.solver.index import TrainRequest, TrainOutcome

LOGGER = setup_logger('Greedy')


@dataclass
class GreedyConfig:
    tie_break: TieBreak = TieBreak.LOWEST_INDEX
    oracle: GreedyOracleKind = GreedyOracleKind.WEIGHTED_ERM
    oracle_cfg: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self):
        self.tie_break = TieBreak(self.tie_break)
        self.oracle = GreedyOracleKind(self.oracle)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], oracle_cfg: Optional[OracleConfig] = None) -> 'GreedyConfig':
        data = dict(data or {})
        known = {f.name for f in fields(cls)} - {'oracle_cfg'}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的 greedy 配置项：{sorted(unknown)}")
        return cls(oracle_cfg=oracle_cfg or OracleConfig.default(),
                   **{k: v for k, v in data.items() if k in known})

    @classmethod
    def default(cls) -> 'GreedyConfig':
        return cls.from_dict(get_section('greedy'))


@dataclass
class GreedyTrace:
    """每一轮选中的假设和它新覆盖的点（布尔掩码）"""
    hypotheses: List[Hypothesis]
    covered: List[np.ndarray]


def _pick(correct: np.ndarray, remaining: np.ndarray, tie_break: TieBreak) -> Tuple[int, int]:
    """correct 是 n × k 的分对矩阵，返回 (列下标, 覆盖的剩余点数)"""
    gains = correct[remaining].sum(axis=0)
    best = int(gains.max())
    tied = np.flatnonzero(gains == best)
    j = int(tied[0] if tie_break == TieBreak.LOWEST_INDEX else tied[-1])
    return j, best


def run_greedy_detailed(ds: Dataset, H: Union[Sequence[Hypothesis], Oracle, None] = None,
                        cfg: Optional[GreedyConfig] = None) -> Tuple[RandomizedClassifier, GreedyTrace]:
    cfg = cfg or GreedyConfig.default()

    if H is None:
        if cfg.oracle == GreedyOracleKind.EXHAUSTIVE_TABULAR:
            raise ValueError("exhaustive_tabular 需要显式的假设列表")
        H = LogisticOracle(cfg.oracle_cfg)

    # 显式列表：固定候选集；oracle：候选池随轮次增长（全量 ERM + 每轮在剩余点上的限制拟合）
    if isinstance(H, TabularArgmaxOracle):
        H = H.hypotheses
    if isinstance(H, Oracle):
        oracle = H
        pool: List[Hypothesis] = [oracle.fit(ds, np.ones(ds.n))]
    else:
        oracle = None
        pool = list(H)
        if not pool:
            raise ShapeError("假设列表不能为空")

    columns = [h.correct_on(ds) for h in pool]
    remaining = np.ones(ds.n, dtype=bool)
    chosen: List[Hypothesis] = []
    covered_sets: List[np.ndarray] = []

    while remaining.any():
        if oracle is not None and len(chosen) > 0:
            h = oracle.fit(ds, remaining.astype(float))
            pool.append(h)
            columns.append(h.correct_on(ds))

        j, gain = _pick(np.column_stack(columns), remaining, cfg.tie_break)
        if gain == 0:
            raise StuckGreedyError(f"第 {len(chosen) + 1} 轮最优假设在剩余 {int(remaining.sum())} 个点上一个都没分对")

        covered = columns[j] & remaining
        chosen.append(pool[j])
        covered_sets.append(covered)
        remaining &= ~covered
        LOGGER.debug(f"第 {len(chosen)} 轮：选中候选 {j}，新覆盖 {gain} 个点，剩余 {int(remaining.sum())}")

    probs = np.array([c.sum() for c in covered_sets], dtype=float) / ds.n
    classifier = RandomizedClassifier(tuple(chosen), probs)
    LOGGER.info(f"Greedy 完成：{len(chosen)} 轮")
    return classifier, GreedyTrace(chosen, covered_sets)


def run_greedy(ds: Dataset, H: Union[Sequence[Hypothesis], Oracle, None] = None,
               cfg: Optional[GreedyConfig] = None) -> RandomizedClassifier:
    """
    Greedy 分类器
    Args:
        ds: 数据集
        H: 显式假设列表（穷举 argmax），或 oracle（生产路径），不传时按 cfg.oracle 构造
        cfg: 并列规则与 oracle 参数
    """
    return run_greedy_detailed(ds, H, cfg)[0]


def greedy_bound(alpha: float) -> float:
    """完全可分子集占比为 α 时 Greedy 的保证：α/2 + (1/(2α))·max(0, 2α-1)²"""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha 必须在 (0, 1] 之间，当前为 {alpha}")
    return alpha / 2.0 + max(0.0, 2.0 * alpha - 1.0) ** 2 / (2.0 * alpha)


def train(request: TrainRequest) -> TrainOutcome:
    if request.train is None:
        raise ValueError("greedy 需要训练数据集")
    section = request.section('greedy')
    if request.options.get('tie_break') is not None:
        section['tie_break'] = request.options['tie_break']
    cfg = GreedyConfig.from_dict(section, OracleConfig.from_dict(request.section('oracle')))
    classifier, trace = run_greedy_detailed(request.train, None, cfg)
    return TrainOutcome(classifier, {"rounds": len(trace.hypotheses),
                                     "covered": [int(c.sum()) for c in trace.covered]})
