"""
有限假设集上的精确 PF 求解
在 m 维单纯形上最大化 f(p) = Σ_i ln(ε + Σ_j p_j·U_ij)，熵镜像下降（乘性更新）从均匀分布出发，
直到一阶证书 max_j Σ_i U_ij / (ε + v_i) ≤ n·(1 + kkt_tol) 为止。目标是凹的，通过证书的点即全局最优（在容差内）
"""

from dataclasses import dataclass, field, fields
from typing import Dict, Any, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section
from core.logger.index import setup_logger
from core.model.errors import NonConvergenceError, ShapeError
from core.model.types import Hypothesis, TabularHypothesis, RandomizedClassifier, StepRule
from core.solver.index import TrainRequest, TrainOutcome

LOGGER = setup_logger('PfExact')

# 线搜索允许步长放大到初始步长的倍数上限
MAX_STEP_GROWTH = 2.0 ** 20
MIN_STEP_RATIO = 1e-14


@dataclass
class PfSolverConfig:
    eps_floor: float = 1e-6
    max_iters: int = 50000
    kkt_tol: float = 1e-4
    step_rule: StepRule = StepRule.LINE_SEARCH
    append_complements: bool = True

    def __post_init__(self):
        if not 0.0 < self.eps_floor < 1.0:
            raise ValueError(f"eps_floor 必须在 (0, 1) 之间，当前为 {self.eps_floor}")
        if not self.kkt_tol > 0:
            raise ValueError(f"kkt_tol 必须大于 0，当前为 {self.kkt_tol}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters 至少为 1，当前为 {self.max_iters}")
        self.max_iters = int(self.max_iters)
        self.step_rule = StepRule(self.step_rule)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'PfSolverConfig':
        data = data or {}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的 pf_exact 配置项：{sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def default(cls) -> 'PfSolverConfig':
        return cls.from_dict(get_section('pf_exact'))


@dataclass
class PfSolution:
    """求解结果，probs 与（补全后的）效用矩阵的列一一对应"""
    classifier: RandomizedClassifier
    probs: np.ndarray
    utility: np.ndarray
    objective: float
    certificate: float
    iterations: int
    appended_complements: int = 0
    trace: List[float] = field(default_factory=list)

    @property
    def point_utilities(self) -> np.ndarray:
        return self.utility.astype(float) @ self.probs


def _as_matrix(U: Any) -> np.ndarray:
    matrix = np.asarray(U)
    if matrix.ndim != 2:
        raise ShapeError(f"效用矩阵必须是二维的，当前维度：{matrix.ndim}")
    n, m = matrix.shape
    if n < 1 or m < 1:
        raise ShapeError(f"效用矩阵至少需要 1 行 1 列，当前形状：{matrix.shape}")
    return matrix.astype(bool)


def pf_objective(U: Any, p: Sequence[float], eps_floor: float) -> float:
    """f(p) = Σ_i ln(ε + v_i)，v = U·p"""
    return _objective(_as_matrix(U).astype(float), np.asarray(p, dtype=float), eps_floor)


def _objective(U: np.ndarray, p: np.ndarray, eps_floor: float) -> float:
    return float(np.sum(np.log(eps_floor + U @ p)))


def _gradient(U: np.ndarray, p: np.ndarray, eps_floor: float) -> np.ndarray:
    v = U @ p
    return U.T @ (1.0 / (eps_floor + v))


def first_order_certificate(U: Any, p: Sequence[float], eps_floor: float) -> float:
    """max_j Σ_i U_ij / (ε + v_i)，PF 最优点处不超过 n"""
    matrix = _as_matrix(U).astype(float)
    return float(_gradient(matrix, np.asarray(p, dtype=float), eps_floor).max())


def complement_closure(U: np.ndarray) -> np.ndarray:
    """返回需要追加的补列（每列的取反不在矩阵中时追加，去重）"""
    present = {U[:, j].tobytes() for j in range(U.shape[1])}
    extra: List[np.ndarray] = []
    for j in range(U.shape[1]):
        flipped = ~U[:, j]
        key = flipped.tobytes()
        if key not in present:
            present.add(key)
            extra.append(flipped)
    if not extra:
        return np.zeros((U.shape[0], 0), dtype=bool)
    return np.column_stack(extra)


def _mirror_step(log_p: np.ndarray, grad: np.ndarray, eta: float) -> Tuple[np.ndarray, np.ndarray]:
    logits = log_p + eta * grad
    logits -= logits[np.isfinite(logits)].max()
    p = np.exp(logits)
    p /= p.sum()
    with np.errstate(divide='ignore'):
        return p, np.log(p)


def solve_pf_detailed(U: Any, cfg: Optional[PfSolverConfig] = None,
                      hypotheses: Optional[Sequence[Hypothesis]] = None) -> PfSolution:
    """
    求解 PF 分类器
    Args:
        U: n × m 布尔效用矩阵，第 j 列是第 j 个假设在各点上是否分对
        cfg: 求解参数
        hypotheses: 与列对应的假设；不传时每列包装成 TabularHypothesis
    Returns:
        PfSolution，零概率的原子也保留在支撑里，列下标与 U 对齐
    """
    cfg = cfg or PfSolverConfig.default()
    matrix = _as_matrix(U)
    n, m = matrix.shape
    support: List[Hypothesis] = list(hypotheses) if hypotheses is not None else \
        [TabularHypothesis(matrix[:, j]) for j in range(m)]
    if len(support) != m:
        raise ShapeError(f"假设数量 {len(support)} 与效用矩阵列数 {m} 不一致")

    appended = 0
    if cfg.append_complements:
        extra = complement_closure(matrix)
        appended = extra.shape[1]
        if appended:
            LOGGER.warning(f"效用矩阵缺少 {appended} 个补列，已自动追加")
            for j in range(appended):
                support.append(TabularHypothesis(extra[:, j]) if hypotheses is None else
                               _complement_of(support, matrix, extra[:, j]))
            matrix = np.hstack([matrix, extra])
            m = matrix.shape[1]

    uncovered = np.flatnonzero(~matrix.any(axis=1))
    if uncovered.size:
        LOGGER.warning(f"{uncovered.size} 个数据点没有任何假设分对，效用固定在 ε：{uncovered.tolist()}")

    Uf = matrix.astype(float)
    eps = cfg.eps_floor
    target = n * (1.0 + cfg.kkt_tol)

    p = np.full(m, 1.0 / m)
    log_p = np.log(p)
    eta0 = 0.5 / n
    eta = eta0
    objective = _objective(Uf, p, eps)
    trace = [objective]
    certificate = float('inf')
    iters = 0

    for iters in range(cfg.max_iters + 1):
        grad = _gradient(Uf, p, eps)
        certificate = float(grad.max())
        if certificate <= target or iters == cfg.max_iters:
            break

        if cfg.step_rule == StepRule.FIXED:
            p, log_p = _mirror_step(log_p, grad, eta)
            objective = _objective(Uf, p, eps)
            trace.append(objective)
            continue

        # 线搜索：目标下降就把步长减半，接受后放大
        while True:
            candidate, candidate_log = _mirror_step(log_p, grad, eta)
            candidate_obj = _objective(Uf, candidate, eps)
            if candidate_obj >= objective:
                break
            eta /= 2.0
            if eta < eta0 * MIN_STEP_RATIO:
                break
        if eta < eta0 * MIN_STEP_RATIO:
            LOGGER.warning(f"步长缩到下限仍无法提升目标，停止于第 {iters} 轮")
            break
        p, log_p, objective = candidate, candidate_log, candidate_obj
        trace.append(objective)
        eta = min(eta * 2.0, eta0 * MAX_STEP_GROWTH)

    if certificate > target:
        raise NonConvergenceError((certificate - n) / n)

    LOGGER.info(f"PF 求解完成：n={n}, m={m}, iters={iters}, f={objective:.6f}, 证书={certificate:.6f}")
    classifier = RandomizedClassifier(tuple(support), p / p.sum())
    return PfSolution(classifier, classifier.probs.copy(), matrix, objective, certificate, iters, appended, trace)


def _complement_of(support: Sequence[Hypothesis], matrix: np.ndarray, column: np.ndarray) -> Hypothesis:
    """在已有假设中找到效用列取反等于 column 的那个，返回它的补假设"""
    flipped = ~column
    for j in range(matrix.shape[1]):
        if np.array_equal(matrix[:, j], flipped):
            return support[j].complement()
    return TabularHypothesis(column)


def solve_pf(U: Any, cfg: Optional[PfSolverConfig] = None,
             hypotheses: Optional[Sequence[Hypothesis]] = None) -> RandomizedClassifier:
    return solve_pf_detailed(U, cfg, hypotheses).classifier


def train(request: TrainRequest) -> TrainOutcome:
    if request.utility is None:
        raise ValueError("pf-exact 需要 --utility-matrix")
    cfg = PfSolverConfig.from_dict(request.section('pf_exact'))
    solution = solve_pf_detailed(request.utility, cfg)
    return TrainOutcome(solution.classifier, {
        "certificate": solution.certificate,
        "objective": solution.objective,
        "iterations": solution.iterations,
        "appended_complements": solution.appended_complements,
    })
