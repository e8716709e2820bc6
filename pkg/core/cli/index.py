#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行入口
主要功能：
1. train：训练 erm / hpf / greedy / befair / pf-exact，输出 model.json 和运行清单
2. audit：整体准确率、各 δ 下的 MAE_δ、累计准确率与下界曲线（CSV）
3. verify：小规模穷举验证，输出每条定理的报告 JSON

使用方法：
python core/cli/index.py train --method hpf --data data/compas-scores-two-years.csv --rounds 20
python core/cli/index.py audit --model runs/train-erm-seed0/model.json --data data/compas-scores-two-years.csv --delta 1.0,1.05,...,1.30 --curves
python core/cli/index.py verify --suite theorems --seeds 0..199

退出码：0 通过，1 运行/求解失败，2 用法错误或枚举上限，3 验证发现反例
"""

import argparse
import hashlib
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Any, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))
from core.config.index import PROJECT_ROOT, get_config, load_config_file
from core.logger.index import setup_logger
from core.model.errors import EnumerationGuardError
from core.model.types import Dataset, RandomizedClassifier
from core.model.utility import save_classifier, load_classifier
from core.data.index import PreprocessConfig, load_csv, load_dataset, load_utility_matrix

LOGGER = setup_logger('Cli')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_WITNESS = 3

SEED_STREAMS = ('data', 'oracle', 'befair', 'audit')
DATASET_SCHEMA_DIR = os.path.join(PROJECT_ROOT, 'config', 'datasets')


class UsageError(Exception):
    """参数取值不合法（argparse 之外的检查）"""


@dataclass
class RunManifest:
    """一次命令的运行清单；outputs 是相对运行目录的文件名"""
    command: str
    config_hash: str
    seed: int
    outputs: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round((time.perf_counter() - start) * 1000.0, 3)

    def record(self, out_dir: str, filename: str) -> str:
        path = os.path.join(out_dir, filename)
        if filename not in self.outputs:
            self.outputs.append(filename)
        return path

    def write_json(self, out_dir: str, filename: str, data: Any) -> str:
        path = self.record(out_dir, filename)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, ensure_ascii=False, indent=2, default=_json_default)
        return path

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "outputs": self.outputs,
            "timings": self.timings,
            "summary": self.summary,
        }

    def save(self, out_dir: str) -> str:
        path = os.path.join(out_dir, 'manifest.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, default=_json_default)
        return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"无法序列化的类型：{type(value).__name__}")


# ---------------------------------------------------------------------------
# 参数解析辅助
# ---------------------------------------------------------------------------

def parse_delta_list(text: str) -> List[float]:
    """'1.0,1.05,...,1.30' 按前两项的步长展开；也接受普通的逗号列表"""
    parts = [p.strip() for p in text.split(',') if p.strip()]
    try:
        if '...' not in parts:
            values = [float(p) for p in parts]
        else:
            idx = parts.index('...')
            if idx < 2 or idx != len(parts) - 2:
                raise UsageError(f"省略号写法需要至少两个起始值和一个终值：{text}")
            values = [float(p) for p in parts[:idx]]
            stop = float(parts[-1])
            step = values[-1] - values[-2]
            if step <= 0:
                raise UsageError(f"δ 列表必须递增：{text}")
            count = int(round((stop - values[-1]) / step))
            values += [round(values[-1] + (i + 1) * step, 10) for i in range(count)]
            if abs(values[-1] - stop) > 1e-9:
                raise UsageError(f"终值 {stop} 不在步长 {step:g} 的网格上：{text}")
    except ValueError:
        raise UsageError(f"无法解析的 δ 列表：{text}")
    if not values:
        raise UsageError("δ 列表不能为空")
    return values


def parse_gamma_grid(text: str) -> List[float]:
    """'start:step:stop'（含终值）或逗号列表"""
    try:
        if ':' not in text:
            return [float(p) for p in text.split(',') if p.strip()]
        start, step, stop = (float(p) for p in text.split(':'))
    except ValueError:
        raise UsageError(f"无法解析的 γ 网格：{text}，格式为 start:step:stop")
    if step <= 0 or stop < start:
        raise UsageError(f"γ 网格需要 step > 0 且 stop ≥ start：{text}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def parse_seed_range(text: str) -> List[int]:
    """'0..199' -> [0, 199]，单个数字表示只跑这一个种子"""
    try:
        if '..' in text:
            lo, hi = (int(p) for p in text.split('..'))
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"无法解析的种子区间：{text}，格式为 起..止")
    if lo < 0 or hi < lo:
        raise UsageError(f"种子区间不合法：{text}")
    return [lo, hi]


def derive_seeds(seed: int) -> Dict[str, int]:
    """一个 --seed 按固定规则拆给各模块"""
    return {name: int(np.random.SeedSequence([int(seed), i]).generate_state(1)[0])
            for i, name in enumerate(SEED_STREAMS)}


# ---------------------------------------------------------------------------
# 配置与数据
# ---------------------------------------------------------------------------

def load_run_config(path: Optional[str]) -> Dict[str, Any]:
    """默认配置上按段覆盖用户配置（yaml 或 json）"""
    config = {k: (dict(v) if isinstance(v, dict) else v) for k, v in get_config().items()}
    if not path:
        return config
    if not os.path.exists(path):
        raise UsageError(f"配置文件不存在：{path}")
    for name, section in load_config_file(path).items():
        if isinstance(section, dict) and isinstance(config.get(name), dict):
            config[name].update(section)
        else:
            config[name] = section
    return config


def config_hash(config: Dict[str, Any]) -> str:
    payload = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def apply_seed(config: Dict[str, Any], seed: Optional[int]) -> Dict[str, int]:
    """给了 --seed 时覆盖 oracle / befair 段的种子，返回派生种子表"""
    if seed is None:
        return {}
    seeds = derive_seeds(seed)
    config.setdefault('oracle', {})['seed'] = seeds['oracle']
    config.setdefault('befair', {})['seed'] = seeds['befair']
    return seeds


def resolve_schema(data_path: str, schema_path: Optional[str]) -> str:
    """没有显式给出时，按文件名前缀在 config/datasets 下找同名配置"""
    if schema_path:
        if not os.path.exists(schema_path):
            raise UsageError(f"数据集配置不存在：{schema_path}")
        return schema_path
    base = os.path.basename(data_path).lower()
    if os.path.isdir(DATASET_SCHEMA_DIR):
        for filename in sorted(os.listdir(DATASET_SCHEMA_DIR)):
            stem, ext = os.path.splitext(filename)
            if ext in ('.yaml', '.yml', '.json') and base.startswith(stem):
                return os.path.join(DATASET_SCHEMA_DIR, filename)
    raise UsageError(f"无法为 {data_path} 推断数据集配置，请用 --dataset-config 指定")


def load_splits(args: argparse.Namespace, seeds: Dict[str, int]) -> Tuple[Dataset, Dataset]:
    if getattr(args, 'dataset', None):
        ds = load_dataset(args.dataset)
        return ds, ds
    if not args.data:
        raise UsageError("需要 --data（CSV）或 --dataset（JSON）")
    if not os.path.exists(args.data):
        raise UsageError(f"数据文件不存在：{args.data}")
    preprocess = PreprocessConfig.from_file(resolve_schema(args.data, args.dataset_config))
    if 'data' in seeds:
        preprocess.seed = seeds['data']
    return load_csv(args.data, preprocess, args.test)


def _out_dir(args: argparse.Namespace, config: Dict[str, Any], default_name: str) -> str:
    out_dir = args.out or os.path.join(PROJECT_ROOT, (config.get('paths') or {}).get('runs_dir', 'runs'), default_name)
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    from core.solver.index import TrainRequest, load_method

    config = load_run_config(args.config)
    seeds = apply_seed(config, args.seed)
    manifest = RunManifest('train', config_hash(config), int(args.seed or 0))
    out_dir = _out_dir(args, config, f"train-{args.method}-seed{args.seed or 0}")

    print(f"🔄 启动训练...")
    print(f"   方法：{args.method}")
    print(f"   输出目录：{out_dir}")

    options = {
        'rounds': args.rounds,
        'delta': args.delta,
        'gamma': args.gamma,
        'gamma_grid': parse_gamma_grid(args.gamma_sweep) if args.gamma_sweep else None,
        'tie_break': args.tie_break,
        'checkpoint': args.checkpoint,
    }

    with manifest.stage('load'):
        if args.method == 'pf-exact':
            if not args.utility_matrix:
                raise UsageError("pf-exact 需要 --utility-matrix")
            request = TrainRequest(config, utility=load_utility_matrix(args.utility_matrix), options=options)
        else:
            train, _ = load_splits(args, seeds)
            print(f"✅ 成功加载训练集：n={train.n}, d={train.d}")
            request = TrainRequest(config, train=train, options=options)

    with manifest.stage('train'):
        outcome = load_method(args.method)(request)

    save_classifier(outcome.classifier, manifest.record(out_dir, 'model.json'))
    for filename, content in outcome.artifacts.items():
        manifest.write_json(out_dir, filename, content)

    manifest.summary = {"method": args.method, "atoms": len(outcome.classifier.atoms()), **outcome.summary}
    if seeds:
        manifest.summary["derived_seeds"] = seeds
    manifest.save(out_dir)

    print(f"📊 训练结果：")
    for key, value in manifest.summary.items():
        print(f"   {key}：{value}")
    print(f"✅ 模型已写入 {os.path.join(out_dir, 'model.json')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

def _ordering_scorer(args: argparse.Namespace, config: Dict[str, Any], D: RandomizedClassifier, train: Dataset) -> Any:
    """--order-by：self（被审计模型）、erm（在训练集上重训一个 ERM），或另一个模型文件"""
    from core.oracle.index import OracleConfig, weighted_erm

    value = args.order_by or 'self'
    if value == 'self':
        return D
    if value == 'erm':
        return weighted_erm(train, np.ones(train.n), OracleConfig.from_dict(config.get('oracle')))
    if os.path.exists(value):
        return load_classifier(value)
    raise UsageError(f"--order-by 只接受 self、erm 或模型文件路径：{value}")


def cmd_audit(args: argparse.Namespace) -> int:
    from core.audit.index import (
        AuditConfig, overall_accuracy, mae_delta, score_ordering, random_subset_ordering,
        cumulative_accuracy, lower_bound_curve, curve_to_csv,
    )
    from core.oracle.index import OracleConfig
    from core.solver.befair import BefairConfig

    if not os.path.exists(args.model):
        raise UsageError(f"模型文件不存在：{args.model}")

    config = load_run_config(args.config)
    seeds = apply_seed(config, args.seed)
    audit_cfg = AuditConfig.from_dict(config.get('audit'))
    oracle_cfg = OracleConfig.from_dict(config.get('oracle'))
    befair_cfg = BefairConfig.from_dict(config.get('befair'), oracle_cfg)
    deltas = parse_delta_list(args.delta) if args.delta else audit_cfg.deltas
    percent = audit_cfg.percent if args.percent is None else args.percent
    num_points = args.curve_points or audit_cfg.curve_points

    model_name = os.path.splitext(os.path.basename(args.model))[0]
    manifest = RunManifest('audit', config_hash(config), int(args.seed or 0))
    out_dir = _out_dir(args, config, f"audit-{os.path.basename(os.path.dirname(os.path.abspath(args.model)))}-{model_name}")

    print(f"🔄 启动审计...")
    print(f"   模型：{args.model}")
    print(f"   δ 列表：{deltas}")

    with manifest.stage('load'):
        D = load_classifier(args.model)
        train, test = load_splits(args, seeds)
        splits = {'train': train, 'test': test}
        print(f"✅ 审计数据：train n={train.n}，test n={test.n}")

    # 两个划分都输出准确率和 MAE；--split 只决定曲线用哪一个
    rows = []
    results: Dict[str, Any] = {}
    for split, ds in splits.items():
        with manifest.stage(f'mae_{split}'):
            accuracy = overall_accuracy(ds, D)
            reports = []
            for delta in deltas:
                value, report = mae_delta(ds, D, delta, befair_cfg, percent=percent, audit_cfg=audit_cfg)
                rows.append((split, delta, value))
                reports.append({"delta": delta, "mae": value, **report.to_dict()})
                print(f"   [{split}] MAE_{delta:g} = {value:.4f}{'%' if percent else ''}")
        results[split] = {"n": ds.n, "overall_accuracy": accuracy, "mae": reports}

    mae_frame = pd.DataFrame(rows, columns=['split', 'delta', 'mae'])
    mae_frame.to_csv(manifest.record(out_dir, 'mae.csv'), index=False, float_format='%.10f')
    manifest.write_json(out_dir, 'audit.json', {
        "curve_split": args.split,
        "percent": percent,
        "splits": results,
    })

    if args.curves:
        ds = splits[args.split]
        with manifest.stage('curves'):
            if args.random_subset is not None:
                ordering = random_subset_ordering(ds.n, args.random_subset, seeds.get('audit', 0))
            else:
                ordering = score_ordering(ds, _ordering_scorer(args, config, D, train))
            curve_to_csv(cumulative_accuracy(ds, ordering, D, num_points),
                         manifest.record(out_dir, 'cumulative_accuracy.csv'))
            curve_to_csv(lower_bound_curve(ds, ordering, oracle_cfg, num_points=num_points),
                         manifest.record(out_dir, 'lower_bound.csv'))

    manifest.summary = {
        "deltas": deltas,
        "curve_split": args.split,
        **{f"{split}_accuracy": results[split]["overall_accuracy"] for split in splits},
        **{f"{split}_mae": [m["mae"] for m in results[split]["mae"]] for split in splits},
    }
    manifest.save(out_dir)

    print(f"📊 审计结果：")
    for split in splits:
        worst = max(m["mae"] for m in results[split]["mae"])
        print(f"   [{split}] 整体准确率：{results[split]['overall_accuracy']:.4f}，"
              f"最大 MAE：{worst:.4f}{'%' if percent else ''}")
    print(f"✅ 结果已写入 {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args: argparse.Namespace) -> int:
    from core.solver.pf_exact import PfSolverConfig
    from core.verify.index import VerifyConfig, run_suite

    config = load_run_config(args.config)
    section = dict(config.get('verify') or {})
    if args.seeds:
        section['seeds'] = parse_seed_range(args.seeds)
    if args.max_n is not None:
        section['max_n'] = args.max_n
    if args.max_m is not None:
        section['max_m'] = args.max_m
    config['verify'] = section

    cfg = VerifyConfig.from_dict(section, PfSolverConfig.from_dict(config.get('pf_exact')))
    manifest = RunManifest('verify', config_hash(config), cfg.seeds[0])
    out_dir = _out_dir(args, config, f"verify-{args.suite}")

    print(f"🔄 启动验证...")
    print(f"   suite：{args.suite}")
    print(f"   种子区间：{cfg.seeds[0]}..{cfg.seeds[1]}，n ≤ {cfg.max_n}，m ≤ {cfg.max_m}")

    with manifest.stage('verify'):
        reports = run_suite(args.suite, cfg)

    for report in reports:
        manifest.write_json(out_dir, f"{report.theorem_id}.json", report.to_dict())
        icon = '✅' if report.passed else '❌'
        print(f"{icon} {report.theorem_id}：{report.instances_checked} 个实例，最差 slack {report.worst_slack:.3e}，"
              f"反例 {len(report.witnesses)} 个")

    failed = [r.theorem_id for r in reports if not r.passed]
    manifest.summary = {"suite": args.suite, "passed": not failed, "failed": failed}
    manifest.save(out_dir)

    if failed:
        print(f"⚠️ 以下检查发现反例：{failed}")
        return EXIT_WITNESS
    print(f"✅ 全部通过")
    return EXIT_OK


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------

def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', type=str, help='CSV 数据文件')
    parser.add_argument('--test', type=str, help='官方测试集 CSV（如 adult.test），给出时不再随机划分')
    parser.add_argument('--dataset', type=str, help='JSON 格式的数据集缓存，代替 --data')
    parser.add_argument('--dataset-config', type=str, help='数据集预处理配置，默认按文件名在 config/datasets 下查找')


def build_parser() -> argparse.ArgumentParser:
    from core.solver.index import list_methods

    parser = argparse.ArgumentParser(prog='befair', description='尽力公平分类工具')
    parser.add_argument('--config', type=str, help='覆盖默认配置的 yaml / json 文件')
    parser.add_argument('--seed', type=int, help='随机种子，按固定规则派生到各模块')
    parser.add_argument('--out', type=str, help='输出目录，默认在 paths.runs_dir 下')
    sub = parser.add_subparsers(dest='command', required=True)

    train = sub.add_parser('train', help='训练分类器')
    train.add_argument('--method', type=str, required=True, choices=list_methods(), help='训练方法')
    _add_data_arguments(train)
    train.add_argument('--utility-matrix', type=str, help='pf-exact 使用的 0/1 效用矩阵 CSV')
    train.add_argument('--rounds', type=int, help='hpf / befair 的轮数')
    train.add_argument('--delta', type=float, help='befair 的 δ')
    train.add_argument('--gamma', type=float, help='befair 的 γ')
    train.add_argument('--gamma-sweep', type=str, help='γ 网格 start:step:stop，取最小可行值')
    train.add_argument('--tie-break', type=str, choices=['lowest_index', 'highest_index'], help='greedy 的并列规则')
    train.add_argument('--checkpoint', type=str, help='befair 检查点文件')
    train.set_defaults(handler=cmd_train)

    audit = sub.add_parser('audit', help='审计模型')
    audit.add_argument('--model', type=str, required=True, help='model.json')
    _add_data_arguments(audit)
    audit.add_argument('--split', type=str, choices=['train', 'test'], default='test', help='曲线使用的数据划分（准确率和 MAE 两个划分都输出）')
    audit.add_argument('--delta', type=str, help="δ 列表，如 '1.0,1.05,...,1.30'")
    audit.add_argument('--percent', action=argparse.BooleanOptionalAction, default=None,
                       help='MAE 按数据集大小的百分比输出')
    audit.add_argument('--curves', action='store_true', help='输出累计准确率与下界曲线')
    audit.add_argument('--order-by', type=str, help='曲线的排序模型：self、erm 或模型文件')
    audit.add_argument('--random-subset', type=float, help='改为随机抽取该比例的点作为排序')
    audit.add_argument('--curve-points', type=int, help='曲线采样点数')
    audit.set_defaults(handler=cmd_audit)

    verify = sub.add_parser('verify', help='小规模穷举验证')
    verify.add_argument('--suite', type=str, choices=['theorems', 'examples', 'all'], default='all')
    verify.add_argument('--seeds', type=str, help="种子区间，如 '0..199'")
    verify.add_argument('--max-n', type=int, help='随机实例的最大点数')
    verify.add_argument('--max-m', type=int, help='随机实例的最大假设数（不含补）')
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return args.handler(args)
    except (UsageError, EnumerationGuardError) as e:
        print(f"❌ {e}")
        return EXIT_USAGE
    except Exception as e:
        LOGGER.error(f"{args.command} 失败：{e}")
        print(f"❌ {args.command} 失败：{e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
