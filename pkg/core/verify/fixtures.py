"""
小规模固定实例
- example1：8 个点，可见特征 a、b，假设 {a, b, ā, b̄}，群组 P / Q / R
- example2：3 个点，h1 分对 {1,2}，h2 分对 {2,3}，外加两者的补
- example3(k)：k(k+1)/2 个点，k+1 个假设（不含补），S 为第一行
- fig1：Blue / Yellow 两个群组各 8 个点，假设 {x=0, y=0} 及其补
- thm1_pair(g1, n)：两个互补的表格假设，h1 恰好分对前 g1 个点
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.data.synthetic import tabular_dataset
from core.model.types import Dataset, Hypothesis, LinearHypothesis, TabularHypothesis, ExplicitGroup
from core.model.utility import utility_matrix


EXAMPLE_NAMES = ('example1', 'example2', 'example3', 'fig1', 'thm1_pair')


@dataclass
class Fixture:
    name: str
    dataset: Dataset
    hypotheses: List[Hypothesis]
    groups: Dict[str, ExplicitGroup] = field(default_factory=dict)

    @property
    def utility(self) -> np.ndarray:
        return utility_matrix(self.dataset, self.hypotheses)


def _example1() -> Fixture:
    a = np.array([1, 1, 0, 0, 1, 1, 0, 0])
    b = np.array([1, 0, 1, 0, 1, 0, 1, 0])
    y = np.array([1, 1, 0, 0, 1, 0, 1, 0])
    ds = Dataset(np.column_stack([a, b]).astype(float), np.where(y == 1, 1, -1), ('a', 'b'))
    # 直接用特征 a / b 作为预测：x̃·θ = feature - 0.5
    h_a = LinearHypothesis(np.array([1.0, 0.0, -0.5]))
    h_b = LinearHypothesis(np.array([0.0, 1.0, -0.5]))
    groups = {
        'P': ExplicitGroup.from_indices(8, [5, 6], 'P'),
        'Q': ExplicitGroup.from_indices(8, [1, 2], 'Q'),
        'R': ExplicitGroup.from_indices(8, [0, 3, 4, 7], 'R'),
    }
    return Fixture('example1', ds, [h_a, h_b, h_a.complement(), h_b.complement()], groups)


def _example2() -> Fixture:
    h1 = TabularHypothesis(np.array([True, True, False]))
    h2 = TabularHypothesis(np.array([False, True, True]))
    subsets = {'1': [0], '2': [1], '3': [2], '12': [0, 1], '23': [1, 2]}
    groups = {name: ExplicitGroup.from_indices(3, idx, name) for name, idx in subsets.items()}
    return Fixture('example2', tabular_dataset(3), [h1, h1.complement(), h2, h2.complement()], groups)


def example3_points(k: int) -> List[Tuple[int, int]]:
    """按行展开的 (行, 列) 坐标，第 r 行有 k - r + 1 个点"""
    return [(r, c) for r in range(1, k + 1) for c in range(1, k - r + 2)]


def _example3(k: int) -> Fixture:
    if k < 2:
        raise ValueError(f"example3 要求 k ≥ 2，当前为 {k}")
    points = example3_points(k)
    n = len(points)

    def covers(predicate) -> TabularHypothesis:
        return TabularHypothesis(np.array([predicate(r, c) for r, c in points]))

    hypotheses: List[Hypothesis] = [covers(lambda r, c: r == 1)]
    for j in range(2, k + 1):
        hypotheses.append(covers(lambda r, c, j=j: (r == j and c <= k - j + 1) or (r == 1 and c == j)))
    hypotheses.append(covers(lambda r, c: r == 1 and c == 1))

    row_one = [i for i, (r, _) in enumerate(points) if r == 1]
    return Fixture(f'example3({k})', tabular_dataset(n), hypotheses,
                   {'S': ExplicitGroup.from_indices(n, row_one, 'S')})


def _fig1() -> Fixture:
    # Blue 更难分：两个坐标轴分类器各错 3 个；Yellow 上 y=0 全对，x=0 错 2 个
    blue = [((1, 1), 1)] * 2 + [((1, -1), 1)] * 3 + [((-1, 1), 1)] * 3
    yellow = [((1, 1), 1)] * 3 + [((-1, -1), -1)] * 3 + [((-1, 1), 1)] + [((1, -1), -1)]
    points = blue + yellow
    ds = Dataset(np.array([p for p, _ in points], dtype=float), np.array([y for _, y in points]), ('x', 'y'))
    x_axis = TabularHypothesis(LinearHypothesis(np.array([1.0, 0.0, 0.0])).correct_on(ds))
    y_axis = TabularHypothesis(LinearHypothesis(np.array([0.0, 1.0, 0.0])).correct_on(ds))
    groups = {
        'Blue': ExplicitGroup.from_indices(16, range(0, 8), 'Blue'),
        'Yellow': ExplicitGroup.from_indices(16, range(8, 16), 'Yellow'),
    }
    return Fixture('fig1', ds, [x_axis, y_axis, x_axis.complement(), y_axis.complement()], groups)


def _thm1_pair(g1: int, n: int) -> Fixture:
    if not 1 <= g1 < n:
        raise ValueError(f"thm1_pair 要求 1 ≤ |g1| < n，当前 |g1|={g1}, n={n}")
    h1 = TabularHypothesis(np.arange(n) < g1)
    return Fixture(f'thm1_pair({g1},{n})', tabular_dataset(n), [h1, h1.complement()],
                   {'g1': ExplicitGroup.from_indices(n, range(g1), 'g1')})


def parse_example_name(name: str) -> Tuple[str, List[int]]:
    """'example3(4)' -> ('example3', [4])，'thm1_pair(3,8)' -> ('thm1_pair', [3, 8])"""
    match = re.fullmatch(r'\s*([a-z0-9_]+)\s*(?:\(([\d\s,]*)\))?\s*', name)
    if not match:
        raise ValueError(f"无法解析的实例名：{name}")
    args = [int(a) for a in (match.group(2) or '').split(',') if a.strip()]
    return match.group(1), args


def build_example(name: str, *args: int) -> Fixture:
    """
    构造固定实例
    Args:
        name: example1 / example2 / example3 / fig1 / thm1_pair，也可以写成 'example3(4)'
        args: example3 的 k（默认 3）；thm1_pair 的 |g1| 和 n（默认 3, 8）
    """
    base, parsed = parse_example_name(name)
    params = list(args) or parsed
    if base == 'example1':
        return _example1()
    if base == 'example2':
        return _example2()
    if base == 'example3':
        return _example3(*(params or [3]))
    if base == 'fig1':
        return _fig1()
    if base == 'thm1_pair':
        return _thm1_pair(*(params or [3, 8]))
    raise ValueError(f"未知的实例：{name}，可选：{list(EXAMPLE_NAMES)}")
