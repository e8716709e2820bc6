"""
BeFair 虚拟博弈求解
学习者对平均对偶 λ̄ 做加权 ERM，对手对平均分类器 h̄ 寻找违反最严重的 (群组 g, 挑战者 h')：
    violation = err_g(h̄) - δ·err_g(h') - γ（真实 0-1 计数）
对手在线性群组上用凸化代理目标 Σ δ·e^{z_g + z_h'} + t_i·(e^{-z_g} - 1) 做多起点梯度下降，再做 EM 式交替改进；
群组和假设集合都有限时可以用 ExhaustiveAdversary 精确枚举
"""

import json
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, asdict
from typing import Dict, Any, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section, worker_count
from core.logger.index import setup_logger
from core.model.errors import EmptyGroupError, InfeasibleSweepError
from core.model.types import (
    Dataset, Hypothesis, LinearHypothesis, Group, LinearGroup, RandomizedClassifier,
)
from core.model.utility import (
    membership, utility_randomized, utility_vector, group_error,
    hypothesis_from_dict, group_from_dict,
)
from core.oracle.index import Oracle, OracleConfig, LogisticOracle
from core.solver.index import TrainRequest, TrainOutcome

LOGGER = setup_logger('BeFair')

# 代理目标出现非有限值时步长减半的下限
MIN_ADV_STEP = 1e-10


@dataclass
class BefairConfig:
    gamma: float = 0.0
    delta: float = 1.0
    rounds: int = 50
    dual_bound: float = 20.0
    adv_norm_bound: float = 10.0
    adv_restarts: int = 5
    adv_steps: int = 500
    adv_step_size: float = 0.05
    em_iters: int = 3
    seed: int = 0
    oracle_cfg: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma 不能为负，当前为 {self.gamma}")
        if self.delta < 1:
            raise ValueError(f"delta 至少为 1，当前为 {self.delta}")
        if int(self.rounds) < 1:
            raise ValueError(f"rounds 至少为 1，当前为 {self.rounds}")
        if not self.dual_bound > 0:
            raise ValueError(f"dual_bound 必须大于 0，当前为 {self.dual_bound}")
        if not self.adv_norm_bound > 0:
            raise ValueError(f"adv_norm_bound 必须大于 0，当前为 {self.adv_norm_bound}")
        if int(self.adv_restarts) < 1 or int(self.adv_steps) < 0 or int(self.em_iters) < 0:
            raise ValueError("adv_restarts 至少为 1，adv_steps 和 em_iters 不能为负")
        if not self.adv_step_size > 0:
            raise ValueError(f"adv_step_size 必须大于 0，当前为 {self.adv_step_size}")
        self.rounds = int(self.rounds)
        self.adv_restarts = int(self.adv_restarts)
        self.adv_steps = int(self.adv_steps)
        self.em_iters = int(self.em_iters)
        self.seed = int(self.seed)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], oracle_cfg: Optional[OracleConfig] = None) -> 'BefairConfig':
        data = dict(data or {})
        known = {f.name for f in fields(cls)} - {'oracle_cfg'}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的 befair 配置项：{sorted(unknown)}")
        return cls(oracle_cfg=oracle_cfg or OracleConfig.default(),
                   **{k: v for k, v in data.items() if k in known})

    @classmethod
    def default(cls) -> 'BefairConfig':
        return cls.from_dict(get_section('befair'))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DualAtom:
    group: Group
    hypothesis: Hypothesis
    weight: float


@dataclass
class DualState:
    """对手的混合策略 λ：若干 (g, h', 权重) 原子，权重和不超过 C"""
    atoms: List[DualAtom] = field(default_factory=list)

    @property
    def total_weight(self) -> float:
        return float(sum(a.weight for a in self.atoms))

    @classmethod
    def average(cls, plays: Sequence[Optional[Tuple[Group, Hypothesis]]], bound: float) -> 'DualState':
        """历史出招的平均：每个非零出招权重 C，零向量出招只计入轮数"""
        if not plays:
            return cls()
        weight = bound / len(plays)
        return cls([DualAtom(g, h, weight) for play in plays if play is not None for g, h in [play]])

    def learner_weights(self, ds: Dataset) -> np.ndarray:
        """w_i = 1 + Σ λ_{g,h'}·1[i ∈ g]"""
        w = np.ones(ds.n)
        for atom in self.atoms:
            w += atom.weight * membership(atom.group, ds.n, ds)
        return w


@dataclass
class ViolationReport:
    """对手本轮找到的最严重违反，violation 用真实 0-1 计数"""
    group: Group
    challenger: Hypothesis
    violation: float
    group_size: int
    round: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "round": self.round,
            "violation": float(self.violation),
            "group_size": int(self.group_size),
            "group": self.group.to_dict(),
            "challenger": self.challenger.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ViolationReport':
        return cls(group_from_dict(data['group']), hypothesis_from_dict(data['challenger']),
                   float(data['violation']), int(data['group_size']), int(data.get('round', 0)))


@dataclass
class FictitiousPlayResult:
    classifier: RandomizedClassifier
    reports: List[ViolationReport]
    converged: bool
    dual: DualState
    learners: List[Hypothesis]


# ---------------------------------------------------------------------------
# 对手目标
# ---------------------------------------------------------------------------

def adversary_objective(ds: Dataset, g: Group, h: Hypothesis, t: np.ndarray, delta: float) -> float:
    """真实目标 Σ_{i∈g} (δ·1[h'(x_i) ≠ y_i] - t_i)，越小违反越严重"""
    mask = membership(g, ds.n, ds)
    wrong = ~utility_vector(h, ds)
    return float(np.sum(delta * wrong[mask] - t[mask]))


def make_report(ds: Dataset, g: Group, h: Hypothesis, t: np.ndarray, cfg: BefairConfig, round_index: int = 0) -> ViolationReport:
    mask = membership(g, ds.n, ds)
    size = int(mask.sum())
    if size == 0:
        raise EmptyGroupError("违反报告的群组不能为空")
    violation = -adversary_objective(ds, g, h, t, cfg.delta) - cfg.gamma
    return ViolationReport(g, h, violation, size, round_index)


def adversary_surrogate(theta_g: np.ndarray, theta_h: np.ndarray, ds: Dataset, t: np.ndarray, delta: float) -> float:
    """凸化代理目标的样本均值"""
    zg = ds.augmented @ theta_g
    zh = -ds.labels * (ds.augmented @ theta_h)
    with np.errstate(over='ignore'):
        return float(np.mean(delta * np.exp(zg + zh) + t * (np.exp(-zg) - 1.0)))


def adversary_surrogate_grad(theta_g: np.ndarray, theta_h: np.ndarray, ds: Dataset, t: np.ndarray,
                             delta: float) -> Tuple[np.ndarray, np.ndarray]:
    zg = ds.augmented @ theta_g
    zh = -ds.labels * (ds.augmented @ theta_h)
    with np.errstate(over='ignore'):
        joint = delta * np.exp(zg + zh)
        pull = t * np.exp(-zg)
    grad_g = ds.augmented.T @ (joint - pull) / ds.n
    grad_h = ds.augmented.T @ (-ds.labels * joint) / ds.n
    return grad_g, grad_h


def _project(theta: np.ndarray, bound: float) -> np.ndarray:
    norm = float(np.linalg.norm(theta))
    return theta if norm <= bound else theta * (bound / norm)


def _descend(ds: Dataset, t: np.ndarray, delta: float, cfg: BefairConfig, theta_g: np.ndarray,
             theta_h: np.ndarray, fix_h: bool = False) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """投影梯度下降；fix_h 时只更新 θ_g。代理目标持续非有限时返回 None"""
    if not np.isfinite(adversary_surrogate(theta_g, theta_h, ds, t, delta)):
        return None
    step = cfg.adv_step_size
    for _ in range(cfg.adv_steps):
        grad_g, grad_h = adversary_surrogate_grad(theta_g, theta_h, ds, t, delta)
        if not (np.all(np.isfinite(grad_g)) and np.all(np.isfinite(grad_h))):
            return None
        # exp 溢出时步长减半
        while True:
            cand_g = _project(theta_g - step * grad_g, cfg.adv_norm_bound)
            cand_h = theta_h if fix_h else _project(theta_h - step * grad_h, cfg.adv_norm_bound)
            if np.isfinite(adversary_surrogate(cand_g, cand_h, ds, t, delta)):
                break
            step /= 2.0
            if step < MIN_ADV_STEP:
                return None
        theta_g, theta_h = cand_g, cand_h
    return theta_g, theta_h


def _full_group(ds: Dataset) -> LinearGroup:
    """x̃·θ = 1 对所有点成立的群组（全集）"""
    theta = np.zeros(ds.d + 1)
    theta[-1] = 1.0
    return LinearGroup(theta)


def adversary_surrogate_solve(ds: Dataset, t: Sequence[float], cfg: Optional[BefairConfig] = None,
                              round_index: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    多起点求解凸化代理目标，按真实目标挑选最优 (θ_g, θ_h')
    Args:
        ds: 数据集
        t: t_i = 平均分类器在点 i 上的期望错误率，取值 [0, 1]
        cfg: 对手参数（restarts / steps / 步长 / 半径 B / δ）
        round_index: 参与派生随机种子，保证每一轮的起点不同且可复现
    """
    cfg = cfg or BefairConfig.default()
    t = np.asarray(t, dtype=float).reshape(-1)
    seeds = np.random.SeedSequence([cfg.seed, round_index]).spawn(cfg.adv_restarts)

    def restart(index: int) -> Optional[Tuple[float, int, np.ndarray, np.ndarray]]:
        rng = np.random.default_rng(seeds[index])
        scale = 1.0 / np.sqrt(ds.d + 1)
        theta_g = _project(rng.normal(scale=scale, size=ds.d + 1), cfg.adv_norm_bound)
        theta_h = _project(rng.normal(scale=scale, size=ds.d + 1), cfg.adv_norm_bound)
        solved = _descend(ds, t, cfg.delta, cfg, theta_g, theta_h)
        if solved is None:
            LOGGER.warning(f"对手第 {index} 个起点代理目标持续非有限，跳过")
            return None
        g = LinearGroup(solved[0])
        if not g.members(ds).any():
            return float('inf'), index, solved[0], solved[1]
        return adversary_objective(ds, g, LinearHypothesis(solved[1]), t, cfg.delta), index, solved[0], solved[1]

    with ThreadPoolExecutor(max_workers=min(worker_count(), cfg.adv_restarts)) as pool:
        results = [r for r in pool.map(restart, range(cfg.adv_restarts)) if r is not None]

    if not results:
        LOGGER.warning("所有起点都失败，退回全集群组")
        return _full_group(ds).theta_g.copy(), np.zeros(ds.d + 1)

    objective, index, theta_g, theta_h = min(results, key=lambda r: (r[0], r[1]))
    if not np.isfinite(objective):
        # 所有起点的群组都为空
        theta_g = _full_group(ds).theta_g.copy()
    return np.array(theta_g), np.array(theta_h)


def em_refine(ds: Dataset, g: Group, h: Hypothesis, t: Sequence[float], delta: float,
              cfg: Optional[BefairConfig] = None, oracle: Optional[Oracle] = None) -> Tuple[Group, Hypothesis]:
    """
    交替改进：固定 h' 用凸化目标重解 θ_g，固定 g 用限制在 g 上的加权 ERM 重解 h'；
    只接受让真实目标严格下降的步骤，群组变空时保留上一对
    """
    cfg = cfg or BefairConfig.default()
    oracle = oracle or LogisticOracle(cfg.oracle_cfg)
    t = np.asarray(t, dtype=float).reshape(-1)
    best = adversary_objective(ds, g, h, t, delta)

    for _ in range(cfg.em_iters):
        improved = False

        if isinstance(g, LinearGroup) and isinstance(h, LinearHypothesis):
            solved = _descend(ds, t, delta, cfg, np.array(g.theta_g), np.array(h.theta), fix_h=True)
            if solved is not None:
                candidate = LinearGroup(solved[0])
                if candidate.members(ds).any():
                    value = adversary_objective(ds, candidate, h, t, delta)
                    if value < best - 1e-12:
                        g, best, improved = candidate, value, True

        candidate_h = oracle.fit_group(ds, g)
        value = adversary_objective(ds, g, candidate_h, t, delta)
        if value < best - 1e-12:
            h, best, improved = candidate_h, value, True

        if not improved:
            break
    return g, h


# ---------------------------------------------------------------------------
# 对手
# ---------------------------------------------------------------------------

class Adversary(ABC):
    """给定 t（平均分类器的逐点错误率）返回违反最严重的 (g, h')"""

    @abstractmethod
    def best_response(self, ds: Dataset, t: np.ndarray, cfg: BefairConfig, round_index: int = 0) -> ViolationReport:
        pass


class SurrogateAdversary(Adversary):
    """线性群组 + 线性挑战者：代理目标多起点下降，再做 EM 改进"""

    def __init__(self, oracle: Optional[Oracle] = None):
        self.oracle = oracle

    def best_response(self, ds: Dataset, t: np.ndarray, cfg: BefairConfig, round_index: int = 0) -> ViolationReport:
        oracle = self.oracle or LogisticOracle(cfg.oracle_cfg)
        theta_g, theta_h = adversary_surrogate_solve(ds, t, cfg, round_index)
        g, h = em_refine(ds, LinearGroup(theta_g), LinearHypothesis(theta_h), t, cfg.delta, cfg, oracle)
        return make_report(ds, g, h, t, cfg, round_index)


class ExhaustiveAdversary(Adversary):
    """有限群组集合 × 有限挑战者集合上的精确枚举，并列取最小下标"""

    def __init__(self, groups: Sequence[Group], hypotheses: Sequence[Hypothesis]):
        if not groups or not hypotheses:
            raise ValueError("群组和挑战者集合都不能为空")
        self.groups = list(groups)
        self.hypotheses = list(hypotheses)

    def best_response(self, ds: Dataset, t: np.ndarray, cfg: BefairConfig, round_index: int = 0) -> ViolationReport:
        best: Optional[Tuple[float, Group, Hypothesis]] = None
        for g in self.groups:
            if not membership(g, ds.n, ds).any():
                continue
            for h in self.hypotheses:
                value = adversary_objective(ds, g, h, t, cfg.delta)
                if best is None or value < best[0]:
                    best = (value, g, h)
        if best is None:
            raise EmptyGroupError("所有候选群组都为空")
        return make_report(ds, best[1], best[2], t, cfg, round_index)


# ---------------------------------------------------------------------------
# 学习者与主循环
# ---------------------------------------------------------------------------

def learner_best_response(ds: Dataset, lam: DualState, cfg: Optional[BefairConfig] = None,
                          oracle: Optional[Oracle] = None) -> Hypothesis:
    cfg = cfg or BefairConfig.default()
    oracle = oracle or LogisticOracle(cfg.oracle_cfg)
    return oracle.fit(ds, lam.learner_weights(ds))


def _save_checkpoint(path: str, round_index: int, learners: List[Hypothesis],
                     plays: List[Optional[Tuple[Group, Hypothesis]]], reports: List[ViolationReport]) -> None:
    state = {
        "round": round_index,
        "learners": [h.to_dict() for h in learners],
        "plays": [None if p is None else {"group": p[0].to_dict(), "challenger": p[1].to_dict()} for p in plays],
        "reports": [r.to_dict() for r in reports],
    }
    tmp = f"{path}.tmp"
    with open(tmp, 'w', encoding='utf-8') as f:
        json.dump(state, f, ensure_ascii=False)
    os.replace(tmp, path)


def _load_checkpoint(path: str) -> Tuple[int, List[Hypothesis], List[Optional[Tuple[Group, Hypothesis]]], List[ViolationReport]]:
    with open(path, 'r', encoding='utf-8') as f:
        state = json.load(f)
    learners = [hypothesis_from_dict(h) for h in state['learners']]
    plays = [None if p is None else (group_from_dict(p['group']), hypothesis_from_dict(p['challenger']))
             for p in state['plays']]
    reports = [ViolationReport.from_dict(r) for r in state['reports']]
    return int(state['round']), learners, plays, reports


def fictitious_play(ds: Dataset, cfg: Optional[BefairConfig] = None, oracle: Optional[Oracle] = None,
                    adversary: Optional[Adversary] = None,
                    checkpoint_path: Optional[str] = None) -> FictitiousPlayResult:
    """
    BeFair 虚拟博弈
    h_0 为普通 ERM，λ_0 = 0；每一轮对手审计 h̄ = uniform(h_0..h_{t-1})，违反 ≤ 0 即停止并返回该 h̄；
    否则对手在 (g, h') 上放全部质量 C，学习者对历史平均 λ̄ 做加权 ERM
    Args:
        ds: 训练集
        cfg: 博弈参数
        oracle: 学习者的 oracle，默认加权逻辑回归
        adversary: 默认 SurrogateAdversary
        checkpoint_path: 给出时每轮写入检查点，已存在则从中恢复
    """
    cfg = cfg or BefairConfig.default()
    oracle = oracle or LogisticOracle(cfg.oracle_cfg)
    adversary = adversary or SurrogateAdversary(oracle)

    start = 0
    if checkpoint_path and os.path.exists(checkpoint_path):
        start, learners, plays, reports = _load_checkpoint(checkpoint_path)
        LOGGER.info(f"从检查点恢复：已完成 {start} 轮")
        if reports and reports[-1].violation <= 0:
            classifier = RandomizedClassifier.uniform(learners)
            return FictitiousPlayResult(classifier, reports, True, DualState.average(plays, cfg.dual_bound), learners)
    else:
        learners = [oracle.fit(ds, np.ones(ds.n))]
        plays = []
        reports = []

    for round_index in range(start, cfg.rounds):
        h_bar = RandomizedClassifier.uniform(learners)
        t = 1.0 - utility_randomized(h_bar, ds)
        report = adversary.best_response(ds, t, cfg, round_index)
        reports.append(report)
        LOGGER.info(f"第 {round_index + 1} 轮：最大违反 {report.violation:.4f}（群组大小 {report.group_size}）")

        if report.violation <= 0:
            if checkpoint_path:
                _save_checkpoint(checkpoint_path, round_index + 1, learners, plays, reports)
            LOGGER.info(f"第 {round_index + 1} 轮通过可行性检查，返回 {len(learners)} 个假设的平均")
            return FictitiousPlayResult(h_bar, reports, True, DualState.average(plays, cfg.dual_bound), learners)

        plays.append((report.group, report.challenger))
        lam_bar = DualState.average(plays, cfg.dual_bound)
        learners.append(learner_best_response(ds, lam_bar, cfg, oracle))
        if checkpoint_path:
            _save_checkpoint(checkpoint_path, round_index + 1, learners, plays, reports)

    LOGGER.warning(f"{cfg.rounds} 轮内未找到可行解，最后一轮违反 {reports[-1].violation:.4f}")
    return FictitiousPlayResult(RandomizedClassifier.uniform(learners), reports, False,
                                DualState.average(plays, cfg.dual_bound), learners)


def feasibility_check(ds: Dataset, D: RandomizedClassifier, constraints: Sequence[Tuple[Group, Hypothesis]],
                      delta: float, gamma: float) -> float:
    """max over (g, h') of err_g(D) - δ·err_g(h') - γ，≤ 0 表示对给定约束集可行"""
    if not constraints:
        raise ValueError("约束列表不能为空")
    u = utility_randomized(D, ds)
    worst = -np.inf
    for g, h in constraints:
        value = group_error(g, u, ds) - delta * group_error(g, utility_vector(h, ds).astype(float), ds) - gamma
        worst = max(worst, value)
    return float(worst)


def train(request: TrainRequest) -> TrainOutcome:
    if request.train is None:
        raise ValueError("befair 需要训练数据集")
    section = request.section('befair')
    for key in ('delta', 'gamma', 'rounds'):
        if request.options.get(key) is not None:
            section[key] = request.options[key]
    cfg = BefairConfig.from_dict(section, OracleConfig.from_dict(request.section('oracle')))

    grid = request.options.get('gamma_grid')
    if grid:
        from core.audit.index import gamma_sweep
        sweep = gamma_sweep(request.train, cfg.delta, grid, cfg)
        if sweep.result is None:
            raise InfeasibleSweepError(f"γ 网格 {list(grid)} 中没有可行解")
        result, gamma = sweep.result, sweep.gamma
    else:
        result = fictitious_play(request.train, cfg, checkpoint_path=request.options.get('checkpoint'))
        gamma = cfg.gamma

    summary = {
        "delta": cfg.delta,
        "gamma": gamma,
        "converged": result.converged,
        "rounds_used": len(result.reports),
        "final_violation": result.reports[-1].violation if result.reports else None,
    }
    return TrainOutcome(result.classifier, summary,
                        {"violations.json": [r.to_dict() for r in result.reports]})
