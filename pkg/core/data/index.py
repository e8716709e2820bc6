"""
CSV 读取与预处理
1. 按配置投影列、丢弃缺失行、执行行过滤、删除敏感特征
2. 类别列 one-hot（词表只来自训练集，测试集未知取值编码为全 0）
3. 数值列按训练集统计量标准化（总体标准差，常数列不缩放）
4. 标签映射到 {-1, +1}，按 seed 打乱后按 split_ratio 划分
传入两个文件时使用给定的 train/test 划分，不打乱
"""

import json
from dataclasses import dataclass, field, fields
from typing import Dict, Any, List, Optional, Tuple

import numpy as np
import pandas as pd

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import load_config_file
from core.logger.index import setup_logger
from core.model.errors import DataFormatError, ShapeError
from core.model.types import Dataset


CONSTANT_STD = 1e-12
LOGGER = setup_logger('DataLoader')


@dataclass
class PreprocessConfig:
    """预处理配置，字段与 config/datasets/*.yaml 一一对应"""
    label_column: str
    positive_label: str = '1'
    drop_columns: List[str] = field(default_factory=list)
    numeric_standardize: bool = True
    split_ratio: float = 0.8
    seed: int = 0
    numeric_columns: Optional[List[str]] = None
    categorical_columns: Optional[List[str]] = None
    keep_columns: Optional[List[str]] = None
    row_filter: Optional[str] = None
    column_names: Optional[List[str]] = None
    skip_rows: int = 0
    test_skip_rows: int = 0
    na_values: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.label_column:
            raise ValueError("label_column 不能为空")
        if not 0.0 < float(self.split_ratio) < 1.0:
            raise ValueError(f"split_ratio 必须在 (0, 1) 之间，当前为 {self.split_ratio}")
        if int(self.seed) < 0:
            raise ValueError("seed 必须是非负整数")
        self.positive_label = str(self.positive_label)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PreprocessConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            LOGGER.warning(f"忽略未知的预处理配置项：{sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_file(cls, path: str) -> 'PreprocessConfig':
        return cls.from_dict(load_config_file(path))


def _normalize_label(value: Any) -> str:
    """adult.test 的标签带句点，例如 '>50K.'"""
    return str(value).strip().rstrip('.')


def _read_frame(path: str, config: PreprocessConfig, skip_rows: int) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"数据文件不存在：{path}")
    try:
        df = pd.read_csv(
            path,
            header=None if config.column_names else 'infer',
            names=config.column_names,
            skiprows=skip_rows or None,
            na_values=config.na_values or None,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise DataFormatError(f"数据文件为空：{path}")
    if df.empty:
        raise DataFormatError(f"数据文件没有数据行：{path}")
    if config.label_column not in df.columns:
        raise DataFormatError(f"缺少标签列 {config.label_column}：{path}")
    return df


def _clean_frame(df: pd.DataFrame, config: PreprocessConfig, path: str) -> pd.DataFrame:
    if config.keep_columns:
        missing = [c for c in config.keep_columns if c not in df.columns]
        if missing:
            raise DataFormatError(f"缺少列 {missing}：{path}")
        df = df[list(config.keep_columns)]

    before = len(df)
    df = df.dropna()
    dropped = before - len(df)
    if dropped:
        LOGGER.info(f"丢弃含缺失值的行 {dropped} 条：{path}")

    if config.row_filter:
        before = len(df)
        df = df.query(config.row_filter)
        LOGGER.info(f"行过滤保留 {len(df)}/{before} 条：{path}")

    drop = [c for c in config.drop_columns if c in df.columns and c != config.label_column]
    df = df.drop(columns=drop)
    if df.empty:
        raise DataFormatError(f"预处理后没有剩余数据：{path}")
    return df.reset_index(drop=True)


def _column_types(df: pd.DataFrame, config: PreprocessConfig) -> Tuple[List[str], List[str]]:
    columns = [c for c in df.columns if c != config.label_column]
    if config.numeric_columns is not None or config.categorical_columns is not None:
        numeric = [c for c in columns if c in (config.numeric_columns or [])]
        categorical = [c for c in columns if c in (config.categorical_columns or [])]
        rest = [c for c in columns if c not in numeric and c not in categorical]
        if rest:
            LOGGER.warning(f"未声明类型的列按 dtype 推断：{rest}")
            numeric += [c for c in rest if pd.api.types.is_numeric_dtype(df[c])]
            categorical += [c for c in rest if not pd.api.types.is_numeric_dtype(df[c])]
    else:
        numeric = [c for c in columns if pd.api.types.is_numeric_dtype(df[c])]
        categorical = [c for c in columns if c not in numeric]
    # 保持原始列顺序
    order = {c: i for i, c in enumerate(columns)}
    return sorted(numeric, key=order.get), sorted(categorical, key=order.get)


def _to_numeric(df: pd.DataFrame, column: str, path: str) -> np.ndarray:
    values = pd.to_numeric(df[column], errors='coerce')
    bad = values.isna() & df[column].notna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataFormatError(f"数值列 {column} 第 {row} 行无法解析：{df[column].iloc[row]!r}（{path}）")
    return values.to_numpy(dtype=float)


class FeatureEncoder:
    """在训练集上拟合 one-hot 词表和标准化统计量，再应用到测试集"""

    def __init__(self, config: PreprocessConfig):
        self.config = config
        self.numeric: List[str] = []
        self.categorical: List[str] = []
        self.vocab: Dict[str, List[str]] = {}
        self.mean: Dict[str, float] = {}
        self.std: Dict[str, float] = {}
        self.columns: List[str] = []

    def fit(self, df: pd.DataFrame, path: str) -> 'FeatureEncoder':
        self.numeric, self.categorical = _column_types(df, self.config)
        self.columns = [c for c in df.columns if c in self.numeric or c in self.categorical]
        for col in self.numeric:
            values = _to_numeric(df, col, path)
            self.mean[col] = float(values.mean())
            self.std[col] = float(values.std())  # 总体标准差
        for col in self.categorical:
            self.vocab[col] = sorted(df[col].astype(str).str.strip().unique().tolist())
        return self

    def feature_names(self) -> List[str]:
        names: List[str] = []
        for col in self.columns:
            if col in self.vocab:
                names += [f"{col}={value}" for value in self.vocab[col]]
            else:
                names.append(col)
        return names

    def transform(self, df: pd.DataFrame, path: str) -> np.ndarray:
        blocks: List[np.ndarray] = []
        for col in self.columns:
            if col in self.vocab:
                # 测试集中未见过的类别变成 NaN，对应全零行
                values = pd.Categorical(df[col].astype(str).str.strip(), categories=self.vocab[col])
                blocks.append(pd.get_dummies(values).to_numpy(dtype=float))
            else:
                values = _to_numeric(df, col, path)
                if self.config.numeric_standardize:
                    values = values - self.mean[col]
                    if self.std[col] >= CONSTANT_STD:
                        values = values / self.std[col]
                blocks.append(values.reshape(-1, 1))
        if not blocks:
            raise ShapeError("预处理后没有任何特征列")
        return np.hstack(blocks)


def _labels(df: pd.DataFrame, config: PreprocessConfig) -> np.ndarray:
    positive = _normalize_label(config.positive_label)
    raw = df[config.label_column].map(_normalize_label)
    return np.where(raw.to_numpy() == positive, 1, -1)


def _split_index(n: int, config: PreprocessConfig) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(int(config.seed))
    perm = rng.permutation(n)
    n_train = int(np.floor(config.split_ratio * n))
    n_train = min(max(n_train, 1), n - 1) if n >= 2 else n
    return perm[:n_train], perm[n_train:]


def load_csv(path: str, config: PreprocessConfig, test_path: Optional[str] = None) -> Tuple[Dataset, Dataset]:
    """
    读取 CSV 并返回 (train, test)
    Args:
        path: 训练（或完整）数据文件
        config: 预处理配置
        test_path: 给出时使用官方测试文件，忽略 split_ratio 且不打乱
    """
    raw = _clean_frame(_read_frame(path, config, config.skip_rows), config, path)

    if test_path:
        train_df = raw
        test_df = _clean_frame(_read_frame(test_path, config, config.test_skip_rows), config, test_path)
    else:
        if len(raw) < 2:
            raise DataFormatError(f"数据行数不足以划分训练/测试集：{path}")
        train_idx, test_idx = _split_index(len(raw), config)
        train_df = raw.iloc[train_idx].reset_index(drop=True)
        test_df = raw.iloc[test_idx].reset_index(drop=True)

    encoder = FeatureEncoder(config).fit(train_df, path)
    names = tuple(encoder.feature_names())
    train = Dataset(encoder.transform(train_df, path), _labels(train_df, config), names)
    test = Dataset(encoder.transform(test_df, test_path or path), _labels(test_df, config), names)

    LOGGER.info(f"加载完成：train n={train.n}, test n={test.n}, d={train.d}")
    return train, test


# ---------------------------------------------------------------------------
# 数据集 JSON 缓存
# ---------------------------------------------------------------------------

def dataset_to_dict(ds: Dataset) -> Dict[str, Any]:
    return {
        "feature_names": list(ds.feature_names),
        "features": ds.features.tolist(),
        "labels": ds.labels.tolist(),
    }


def dataset_from_dict(data: Dict[str, Any]) -> Dataset:
    try:
        return Dataset(np.asarray(data['features'], dtype=float),
                       np.asarray(data['labels'], dtype=int),
                       tuple(data.get('feature_names') or ()))
    except KeyError as e:
        raise DataFormatError(f"数据集 JSON 缺少字段：{e}")


def save_dataset(ds: Dataset, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(dataset_to_dict(ds), f, ensure_ascii=False)


def load_dataset(path: str) -> Dataset:
    with open(path, 'r', encoding='utf-8') as f:
        return dataset_from_dict(json.load(f))


def load_utility_matrix(path: str) -> np.ndarray:
    """读取效用矩阵 CSV：行是数据点，列是假设，取值 0/1；首行是列名"""
    df = pd.read_csv(path)
    if df.empty:
        raise DataFormatError(f"效用矩阵为空：{path}")
    values = df.to_numpy()
    if not np.all(np.isin(values, (0, 1))):
        raise DataFormatError(f"效用矩阵只能包含 0/1：{path}")
    return values.astype(bool)
