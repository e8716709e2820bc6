"""
启发式 PF（加权认可投票）
每一轮用 1/(1+c_i) 加权调用 oracle，c_i 是此前已经分对点 i 的轮数；
本轮得分 w_r = Σ_{i∈T_r} 1/(1+c_i)（用更新前的计数），最终按 w_r 的比例混合各轮假设
"""

from dataclasses import dataclass, field, fields
from typing import Dict, Any, List, Optional, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section
from core.logger.index import setup_logger
from core.model.errors import DegenerateOracleError
from core.model.types import Dataset, Hypothesis, RandomizedClassifier
from core.oracle.index import Oracle, OracleConfig, LogisticOracle
from core.solver.index import TrainRequest, TrainOutcome

LOGGER = setup_logger('Hpf')


@dataclass
class HpfConfig:
    rounds: int = 20
    oracle_cfg: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise ValueError(f"rounds 至少为 1，当前为 {self.rounds}")
        self.rounds = int(self.rounds)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], oracle_cfg: Optional[OracleConfig] = None) -> 'HpfConfig':
        data = dict(data or {})
        known = {f.name for f in fields(cls)} - {'oracle_cfg'}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的 hpf 配置项：{sorted(unknown)}")
        return cls(oracle_cfg=oracle_cfg or OracleConfig.default(),
                   **{k: v for k, v in data.items() if k in known})

    @classmethod
    def default(cls) -> 'HpfConfig':
        return cls.from_dict(get_section('hpf'))


@dataclass
class HpfTrace:
    """每一轮的假设、得分，以及结束时的覆盖计数"""
    hypotheses: List[Hypothesis]
    scores: List[float]
    cover_counts: np.ndarray


def run_hpf_detailed(ds: Dataset, cfg: Optional[HpfConfig] = None,
                     oracle: Optional[Oracle] = None) -> Tuple[RandomizedClassifier, HpfTrace]:
    cfg = cfg or HpfConfig.default()
    oracle = oracle or LogisticOracle(cfg.oracle_cfg)

    counts = np.zeros(ds.n, dtype=int)
    chosen: List[Hypothesis] = []
    scores: List[float] = []

    for r in range(cfg.rounds):
        weights = 1.0 / (1.0 + counts)
        h = oracle.fit(ds, weights)
        covered = h.correct_on(ds)
        score = float(weights[covered].sum())
        counts += covered.astype(int)
        chosen.append(h)
        scores.append(score)
        LOGGER.debug(f"第 {r + 1} 轮：分对 {int(covered.sum())}/{ds.n}，得分 {score:.4f}")

    total = float(np.sum(scores))
    if total <= 0:
        raise DegenerateOracleError(f"{cfg.rounds} 轮 oracle 都没有分对任何点，无法归一化")

    classifier = RandomizedClassifier.from_weights(chosen, scores)
    LOGGER.info(f"hPF 完成：{cfg.rounds} 轮，正概率原子 {len(classifier.atoms())} 个")
    return classifier, HpfTrace(chosen, scores, counts)


def run_hpf(ds: Dataset, cfg: Optional[HpfConfig] = None, oracle: Optional[Oracle] = None) -> RandomizedClassifier:
    """
    启发式 PF 分类器
    Args:
        ds: 训练集
        cfg: 轮数与 oracle 参数
        oracle: 默认用加权逻辑回归，验证时可换成 TabularArgmaxOracle
    """
    return run_hpf_detailed(ds, cfg, oracle)[0]


def train(request: TrainRequest) -> TrainOutcome:
    if request.train is None:
        raise ValueError("hpf 需要训练数据集")
    section = request.section('hpf')
    if request.options.get('rounds') is not None:
        section['rounds'] = request.options['rounds']
    cfg = HpfConfig.from_dict(section, OracleConfig.from_dict(request.section('oracle')))
    classifier, trace = run_hpf_detailed(request.train, cfg)
    return TrainOutcome(classifier, {"rounds": cfg.rounds, "round_scores": [round(s, 10) for s in trace.scores]})
