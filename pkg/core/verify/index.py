"""
小规模穷举验证
对每个实例枚举全部 2^n - 1 个非空子集（位运算 DP，向量化），检查 PF / Greedy 的各项保证，
以及固定实例上的数值复现。实例之间用线程池并行，单个实例内的枚举是单线程的
"""

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Dict, Any, Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section, worker_count
from core.data.synthetic import SyntheticSpec, synthetic_instance
from core.logger.index import setup_logger
from core.model.errors import EnumerationGuardError, ShapeError
from core.model.types import Dataset, Hypothesis, RandomizedClassifier, TieBreak
from core.model.utility import utility_matrix, utility_randomized, utility_vector, group_utility
from core.oracle.index import TabularArgmaxOracle
from core.solver.befair import BefairConfig, ExhaustiveAdversary, fictitious_play, feasibility_check
from core.solver.greedy import GreedyConfig, run_greedy, greedy_bound
from core.solver.hpf import HpfConfig, run_hpf
from core.solver.pf_exact import PfSolverConfig, solve_pf_detailed, pf_objective
from core.verify.fixtures import build_example

LOGGER = setup_logger('Verify')

MAX_ENUMERATION_N = 20
GREEDY_TOL = 1e-9
SHARPNESS_TOL = 1e-3
EXACT_TOL = 1e-12
MAX_WITNESSES_PER_INSTANCE = 5

SWEEP_THEOREMS = ('thm_pf', 'cor_pf', 'robust_pf', 'thm_greedy', 'robust_greedy')
THEOREMS = SWEEP_THEOREMS + ('thm1_sharpness', 'greedy_tightness')
SUITES = {
    'theorems': THEOREMS,
    'examples': ('examples',),
    'all': THEOREMS + ('examples',),
}


@dataclass
class VerifyConfig:
    """seeds 是闭区间 [起, 止]"""
    seeds: List[int] = field(default_factory=lambda: [0, 199])
    max_n: int = 12
    max_m: int = 6
    enumeration_cap: int = MAX_ENUMERATION_N
    pf: PfSolverConfig = field(default_factory=PfSolverConfig)

    def __post_init__(self):
        if len(self.seeds) != 2 or int(self.seeds[0]) > int(self.seeds[1]):
            raise ValueError(f"seeds 必须是 [起, 止] 且起 ≤ 止，当前为 {self.seeds}")
        self.seeds = [int(s) for s in self.seeds]
        if int(self.max_n) < 2:
            raise ValueError(f"max_n 至少为 2，当前为 {self.max_n}")
        if int(self.max_m) < 1:
            raise ValueError(f"max_m 至少为 1，当前为 {self.max_m}")
        if not 1 <= int(self.enumeration_cap) <= MAX_ENUMERATION_N:
            raise ValueError(f"enumeration_cap 必须在 [1, {MAX_ENUMERATION_N}] 之间，当前为 {self.enumeration_cap}")
        self.max_n = int(self.max_n)
        self.max_m = int(self.max_m)
        self.enumeration_cap = int(self.enumeration_cap)

    @property
    def seed_range(self) -> range:
        return range(self.seeds[0], self.seeds[1] + 1)

    @property
    def pf_tolerance(self) -> float:
        return 10.0 * self.pf.kkt_tol + self.pf.eps_floor

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], pf_cfg: Optional[PfSolverConfig] = None) -> 'VerifyConfig':
        data = dict(data or {})
        known = {f.name for f in fields(cls)} - {'pf'}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的 verify 配置项：{sorted(unknown)}")
        return cls(pf=pf_cfg or PfSolverConfig.default(), **{k: v for k, v in data.items() if k in known})

    @classmethod
    def default(cls) -> 'VerifyConfig':
        return cls.from_dict(get_section('verify'))


@dataclass
class VerifyInstance:
    """seed 为 None 表示固定实例"""
    label: str
    dataset: Dataset
    hypotheses: List[Hypothesis]
    seed: Optional[int] = None

    @property
    def utility(self) -> np.ndarray:
        return utility_matrix(self.dataset, self.hypotheses)


@dataclass
class TheoremReport:
    theorem_id: str
    instances_checked: int
    worst_slack: float
    witnesses: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theorem_id": self.theorem_id,
            "instances_checked": self.instances_checked,
            "worst_slack": self.worst_slack if np.isfinite(self.worst_slack) else None,
            "passed": self.passed,
            "witnesses": self.witnesses,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


# ---------------------------------------------------------------------------
# 子集枚举
# ---------------------------------------------------------------------------

def check_enumeration(n: int, cap: int = MAX_ENUMERATION_N) -> None:
    if n > min(cap, MAX_ENUMERATION_N):
        raise EnumerationGuardError(f"n={n} 超过子集枚举上限 {min(cap, MAX_ENUMERATION_N)}（2^n 个子集）")


def subset_sums(values: np.ndarray) -> np.ndarray:
    """
    所有子集上的逐行求和，第 mask 行是 mask 中各位对应行之和
    Args:
        values: 长度 n 的向量或 n × m 矩阵
    Returns:
        2^n 行的数组，第 0 行（空集）为 0
    """
    values = np.asarray(values)
    n = values.shape[0]
    out = np.zeros((1 << n,) + values.shape[1:], dtype=values.dtype)
    for i in range(n):
        out[1 << i: 1 << (i + 1)] = out[:1 << i] + values[i]
    return out


def mask_members(mask: int, n: int) -> List[int]:
    return [i for i in range(n) if (mask >> i) & 1]


def subset_mask(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


@dataclass
class SubsetTable:
    """每个子集 S 上最优列的正确数、列下标（并列取最小下标）和 |S|"""
    n: int
    sizes: np.ndarray
    best_count: np.ndarray
    argmax: np.ndarray

    @property
    def best_utility(self) -> np.ndarray:
        with np.errstate(invalid='ignore', divide='ignore'):
            return self.best_count / self.sizes

    @property
    def perfect(self) -> np.ndarray:
        """完全可分的非空子集掩码"""
        return (self.sizes > 0) & (self.best_count == self.sizes)

    def lookup(self, indices: Iterable[int]) -> Tuple[float, int]:
        mask = subset_mask(indices)
        if mask == 0 or mask >= (1 << self.n):
            raise ValueError("子集必须非空且下标在 [0, n) 内")
        return float(self.best_count[mask] / self.sizes[mask]), int(self.argmax[mask])

    def as_mapping(self) -> Dict[frozenset, Tuple[float, int]]:
        return {frozenset(mask_members(mask, self.n)): (float(self.best_count[mask] / self.sizes[mask]),
                                                        int(self.argmax[mask]))
                for mask in range(1, 1 << self.n)}


def best_per_subset(U: Any, cap: int = MAX_ENUMERATION_N) -> SubsetTable:
    """穷举每个非空子集上的最优列"""
    matrix = np.asarray(U, dtype=bool)
    if matrix.ndim != 2 or matrix.shape[1] == 0:
        raise ShapeError(f"效用矩阵必须是非空二维布尔矩阵，当前形状为 {matrix.shape}")
    n = matrix.shape[0]
    check_enumeration(n, cap)
    counts = subset_sums(matrix.astype(np.int16))
    sizes = subset_sums(np.ones(n, dtype=np.int16))
    return SubsetTable(n, sizes, counts.max(axis=1), counts.argmax(axis=1))


# ---------------------------------------------------------------------------
# 实例流
# ---------------------------------------------------------------------------

def random_tabular_stream(seeds: Iterable[int], max_n: int, max_m: int,
                          cap: int = MAX_ENUMERATION_N) -> Iterator[VerifyInstance]:
    """每个种子一个实例：n ∈ [2, max_n]，m ∈ [1, max_m] 个随机列再加上各自的补"""
    check_enumeration(max_n, cap)
    for seed in seeds:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
        n = int(rng.integers(2, max_n + 1))
        m = int(rng.integers(1, max_m + 1))
        ds, hypotheses = synthetic_instance(SyntheticSpec.random_tabular(n, m, int(seed)))
        yield VerifyInstance(f'random-tabular(seed={seed}, n={n}, m={m})', ds, hypotheses, int(seed))


def thm1_pair_stream(n: int = 10) -> Iterator[VerifyInstance]:
    for g1 in range(1, n):
        fixture = build_example('thm1_pair', g1, n)
        yield VerifyInstance(fixture.name, fixture.dataset, fixture.hypotheses)


def example3_stream(ks: Sequence[int] = (3, 4, 5)) -> Iterator[VerifyInstance]:
    for k in ks:
        fixture = build_example('example3', k)
        yield VerifyInstance(fixture.name, fixture.dataset, fixture.hypotheses)


# ---------------------------------------------------------------------------
# 单实例检查
# ---------------------------------------------------------------------------

InstanceResult = Tuple[float, List[Dict[str, Any]]]


def _collect(instance: VerifyInstance, masks: np.ndarray, slacks: np.ndarray, tol: float) -> InstanceResult:
    """slack < -tol 的子集记为反例，每个实例最多保留最差的几个"""
    if masks.size == 0:
        return float('inf'), []
    failing = np.flatnonzero(slacks < -tol)
    failing = failing[np.argsort(slacks[failing], kind='stable')][:MAX_WITNESSES_PER_INSTANCE]
    witnesses = [{"seed": instance.seed, "instance": instance.label,
                  "subset": mask_members(int(masks[i]), instance.dataset.n), "slack": float(slacks[i])}
                 for i in failing]
    return float(slacks.min()), witnesses


def _subset_utilities(v: np.ndarray) -> np.ndarray:
    sums = subset_sums(np.asarray(v, dtype=float))
    sizes = subset_sums(np.ones(v.shape[0]))
    out = np.zeros_like(sums)
    out[1:] = sums[1:] / sizes[1:]
    return out


def _check_pf(instance: VerifyInstance, cfg: VerifyConfig, theorem_id: str) -> InstanceResult:
    U = instance.utility
    table = best_per_subset(U, cfg.enumeration_cap)
    v = solve_pf_detailed(U, cfg.pf).point_utilities
    u_s = _subset_utilities(v)
    alpha = table.sizes / instance.dataset.n

    if theorem_id == 'cor_pf':
        masks = np.arange(1, 1 << table.n)
        slacks = u_s[masks] - alpha[masks] * table.best_utility[masks] ** 2
    else:
        eligible = table.perfect
        if theorem_id == 'robust_pf':
            eligible &= (1.0 - alpha) < 0.5
        masks = np.flatnonzero(eligible)
        # robust_pf 的 δ - (1 - u_S) 与 u_S - α 相同
        slacks = u_s[masks] - alpha[masks]
    return _collect(instance, masks, slacks, cfg.pf_tolerance)


def _check_greedy(instance: VerifyInstance, cfg: VerifyConfig, theorem_id: str) -> InstanceResult:
    table = best_per_subset(instance.utility, cfg.enumeration_cap)
    D = run_greedy(instance.dataset, instance.hypotheses, GreedyConfig(tie_break=TieBreak.LOWEST_INDEX))
    u_s = _subset_utilities(utility_randomized(D, instance.dataset))
    alpha = table.sizes / instance.dataset.n

    eligible = table.perfect
    if theorem_id == 'robust_greedy':
        eligible &= (1.0 - alpha) < 0.5
    masks = np.flatnonzero(eligible)
    if theorem_id == 'robust_greedy':
        slacks = 2.0 * (1.0 - alpha[masks]) - (1.0 - u_s[masks])
    else:
        slacks = u_s[masks] - np.array([greedy_bound(a) for a in alpha[masks]])
    return _collect(instance, masks, slacks, GREEDY_TOL)


def _check_sharpness(instance: VerifyInstance, cfg: VerifyConfig, theorem_id: str) -> InstanceResult:
    """两个互补假设时 PF 的 p 就是 |g1|/n，第一列分对的点就是 g1"""
    U = instance.utility
    v = solve_pf_detailed(U, cfg.pf).point_utilities
    g1 = np.flatnonzero(U[:, 0])
    alpha = g1.size / instance.dataset.n
    slack = SHARPNESS_TOL - abs(float(v[g1].mean()) - alpha)
    return _collect(instance, np.array([subset_mask(g1)]), np.array([slack]), 0.0)


def _check_tightness(instance: VerifyInstance, cfg: VerifyConfig, theorem_id: str) -> InstanceResult:
    """Greedy 在最坏并列规则下，第一行 S 上的效用恰好是 1/k"""
    D = run_greedy(instance.dataset, instance.hypotheses, GreedyConfig(tie_break=TieBreak.HIGHEST_INDEX))
    row_one = np.flatnonzero(instance.hypotheses[0].correct_on(instance.dataset))
    k = row_one.size
    u_s = float(utility_randomized(D, instance.dataset)[row_one].mean())
    slack = EXACT_TOL - abs(u_s - 1.0 / k)
    return _collect(instance, np.array([subset_mask(row_one)]), np.array([slack]), 0.0)


CHECKS: Dict[str, Callable[[VerifyInstance, VerifyConfig, str], InstanceResult]] = {
    'thm_pf': _check_pf,
    'cor_pf': _check_pf,
    'robust_pf': _check_pf,
    'thm_greedy': _check_greedy,
    'robust_greedy': _check_greedy,
    'thm1_sharpness': _check_sharpness,
    'greedy_tightness': _check_tightness,
}


# ---------------------------------------------------------------------------
# 固定实例复现
# ---------------------------------------------------------------------------

def _simplex_grid(m: int, steps: int) -> np.ndarray:
    """m 维单纯形上步长 1/steps 的全部格点（隔板法）"""
    points = []
    for bars in itertools.combinations(range(steps + m - 1), m - 1):
        edges = (-1,) + bars + (steps + m - 1,)
        points.append([edges[i + 1] - edges[i] - 1 for i in range(m)])
    return np.array(points, dtype=float) / steps


def grid_search_pf(U: Any, eps_floor: float, steps: int = 50) -> float:
    """格点上的最大 PF 目标，只适合 m 很小的实例"""
    matrix = np.asarray(U, dtype=float)
    grid = _simplex_grid(matrix.shape[1], steps)
    return float(np.max(np.sum(np.log(eps_floor + grid @ matrix.T), axis=1)))


def _mixture_utilities(ds: Dataset, weighted: Sequence[Tuple[Hypothesis, float]]) -> np.ndarray:
    return sum(p * utility_vector(h, ds).astype(float) for h, p in weighted)


def example_checks(cfg: VerifyConfig) -> List[Tuple[str, float]]:
    """每一项返回 (名称, slack)，slack < 0 即失败"""
    results: List[Tuple[str, float]] = []

    ex1 = build_example('example1')
    pf1 = solve_pf_detailed(ex1.utility, cfg.pf, ex1.hypotheses)
    v1 = pf1.point_utilities
    for name, target in (('P', 0.5), ('Q', 0.5), ('R', 1.0)):
        results.append((f'example1 PF u_{name}', SHARPNESS_TOL - abs(group_utility(ex1.groups[name], v1, ex1.dataset) - target)))

    a, b = ex1.hypotheses[0], ex1.hypotheses[1]
    greedy1 = run_greedy(ex1.dataset, ex1.hypotheses, GreedyConfig(tie_break=TieBreak.LOWEST_INDEX))
    expected = _mixture_utilities(ex1.dataset, [(a, 0.75), (b, 0.25)])
    results.append(('example1 Greedy = 0.75a + 0.25b',
                    EXACT_TOL - float(np.max(np.abs(utility_randomized(greedy1, ex1.dataset) - expected)))))

    hpf1 = run_hpf(ex1.dataset, HpfConfig(rounds=2), TabularArgmaxOracle(ex1.hypotheses))
    expected = _mixture_utilities(ex1.dataset, [(a, 0.6), (b, 0.4)])
    results.append(('example1 hPF(R=2) = 0.6a + 0.4b',
                    EXACT_TOL - float(np.max(np.abs(utility_randomized(hpf1, ex1.dataset) - expected)))))

    ex2 = build_example('example2')
    half = RandomizedClassifier((ex2.hypotheses[0], ex2.hypotheses[2]), np.array([0.5, 0.5]))
    v2 = utility_randomized(half, ex2.dataset)
    for name, target in zip(('1', '2', '3', '12', '23'), (0.5, 1.0, 0.5, 0.75, 0.75)):
        results.append((f'example2 ½h1+½h2 u_{{{name}}}',
                        EXACT_TOL - abs(group_utility(ex2.groups[name], v2, ex2.dataset) - target)))
    pf2 = solve_pf_detailed(ex2.utility, cfg.pf, ex2.hypotheses)
    grid_best = grid_search_pf(ex2.utility, cfg.pf.eps_floor)
    results.append(('example2 PF 目标 vs 格点搜索', SHARPNESS_TOL - abs(pf2.objective - grid_best)))
    results.append(('example2 PF 目标 vs -2ln2', SHARPNESS_TOL - abs(pf_objective(ex2.utility, pf2.probs, cfg.pf.eps_floor)
                                                                     + 2.0 * np.log(2.0))))

    fig = build_example('fig1')
    constraints = [(g, h) for g in fig.groups.values() for h in fig.hypotheses]
    game_cfg = BefairConfig(gamma=0.0, delta=1.0, rounds=20)
    game = fictitious_play(fig.dataset, game_cfg, TabularArgmaxOracle(fig.hypotheses),
                           ExhaustiveAdversary(list(fig.groups.values()), fig.hypotheses))
    results.append(('fig1 BeFair 收敛', 0.0 if game.converged else -1.0))
    results.append(('fig1 BeFair 满足全部群组约束', -feasibility_check(fig.dataset, game.classifier, constraints, 1.0, 0.0)))
    x_only = RandomizedClassifier.point_mass(fig.hypotheses[0])
    yellow_gap = feasibility_check(fig.dataset, x_only, [(fig.groups['Yellow'], h) for h in fig.hypotheses], 1.0, 0.0)
    results.append(('fig1 x=0 在 Yellow 上违反', yellow_gap - GREEDY_TOL))
    return results


def _examples_report(cfg: VerifyConfig) -> TheoremReport:
    checks = example_checks(cfg)
    witnesses = [{"seed": None, "instance": name, "subset": [], "slack": float(slack)}
                 for name, slack in checks if slack < 0]
    return TheoremReport('examples', len(checks), float(min(s for _, s in checks)), witnesses)


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------

def default_instances(theorem_id: str, cfg: VerifyConfig) -> Iterator[VerifyInstance]:
    if theorem_id in SWEEP_THEOREMS:
        return random_tabular_stream(cfg.seed_range, cfg.max_n, cfg.max_m, cfg.enumeration_cap)
    if theorem_id == 'thm1_sharpness':
        return thm1_pair_stream()
    if theorem_id == 'greedy_tightness':
        return example3_stream()
    raise ValueError(f"未知的定理：{theorem_id}，可选：{list(THEOREMS) + ['examples']}")


def check_theorem(theorem_id: str, instances: Optional[Iterable[VerifyInstance]] = None,
                  cfg: Optional[VerifyConfig] = None) -> TheoremReport:
    """
    在实例流上检查一条保证
    Args:
        theorem_id: THEOREMS 之一，或 'examples'（固定实例复现，忽略 instances）
        instances: 不传时使用该定理的默认实例流
        cfg: 种子区间、规模上限与 PF 求解参数
    Returns:
        TheoremReport，worst_slack 是所有实例上最小的 slack
    """
    cfg = cfg or VerifyConfig.default()
    if theorem_id == 'examples':
        report = _examples_report(cfg)
    else:
        if theorem_id not in CHECKS:
            raise ValueError(f"未知的定理：{theorem_id}，可选：{list(THEOREMS) + ['examples']}")
        stream = list(instances if instances is not None else default_instances(theorem_id, cfg))
        for instance in stream:
            check_enumeration(instance.dataset.n, cfg.enumeration_cap)
        check = CHECKS[theorem_id]
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            results = list(pool.map(lambda inst: check(inst, cfg, theorem_id), stream))
        worst = min((r[0] for r in results), default=float('inf'))
        witnesses = [w for _, ws in results for w in ws]
        report = TheoremReport(theorem_id, len(stream), worst, witnesses)

    if report.passed:
        LOGGER.info(f"{theorem_id}：{report.instances_checked} 个实例通过，最差 slack {report.worst_slack:.3e}")
    else:
        seeds = sorted({w['seed'] for w in report.witnesses if w['seed'] is not None})
        LOGGER.warning(f"{theorem_id}：发现 {len(report.witnesses)} 个反例，种子 {seeds}")
    return report


def run_suite(suite: str, cfg: Optional[VerifyConfig] = None) -> List[TheoremReport]:
    if suite not in SUITES:
        raise ValueError(f"未知的 suite：{suite}，可选：{sorted(SUITES)}")
    cfg = cfg or VerifyConfig.default()
    if suite != 'examples':
        check_enumeration(cfg.max_n, cfg.enumeration_cap)
    return [check_theorem(theorem_id, None, cfg) for theorem_id in SUITES[suite]]
