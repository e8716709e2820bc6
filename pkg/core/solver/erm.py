"""
普通加权 ERM 基线（均匀权重的逻辑回归）
"""

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.model.types import RandomizedClassifier
from core.oracle.index import OracleConfig, weighted_erm
from core.solver.index import TrainRequest, TrainOutcome


def train(request: TrainRequest) -> TrainOutcome:
    if request.train is None:
        raise ValueError("erm 需要训练数据集")
    cfg = OracleConfig.from_dict(request.section('oracle'))
    h = weighted_erm(request.train, np.ones(request.train.n), cfg)
    return TrainOutcome(RandomizedClassifier.point_mass(h))
