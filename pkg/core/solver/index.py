"""
训练方法注册表
--method 名字映射到 core/solver 下的模块，模块里约定暴露 train(request) -> TrainOutcome，运行时动态加载
"""

import importlib
from dataclasses import dataclass, field
from typing import Dict, Any, Callable, List, Optional

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.model.types import Dataset, RandomizedClassifier


METHODS: Dict[str, str] = {
    'erm': 'erm',
    'hpf': 'hpf',
    'greedy': 'greedy',
    'befair': 'befair',
    'pf-exact': 'pf_exact',
}


@dataclass
class TrainRequest:
    """一次训练的输入：数据集（pf-exact 用效用矩阵）、合并后的完整配置、命令行覆盖项"""
    config: Dict[str, Any]
    train: Optional[Dataset] = None
    utility: Optional[np.ndarray] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.config.get(name) or {})


@dataclass
class TrainOutcome:
    """训练结果；summary 写进运行清单，artifacts 是额外要落盘的 JSON（文件名 -> 内容）"""
    classifier: RandomizedClassifier
    summary: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, Any] = field(default_factory=dict)


def load_method(name: str) -> Callable[[TrainRequest], TrainOutcome]:
    """按名字动态加载训练函数"""
    if name not in METHODS:
        raise ValueError(f"未知的训练方法：{name}，可选：{sorted(METHODS)}")
    module = importlib.import_module(f"core.solver.{METHODS[name]}")
    train = getattr(module, 'train', None)
    if train is None:
        raise AttributeError(f"模块 core.solver.{METHODS[name]} 中未找到 train 函数")
    return train


def list_methods() -> List[str]:
    return sorted(METHODS)
