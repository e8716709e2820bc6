"""
运行结果相关的 API 路由
只读浏览 runs 目录下的运行清单、模型和曲线
"""

from flask import Flask, request, current_app
from typing import Dict, Any, List, Optional
import json
import os
import sys

import pandas as pd

# 动态添加项目根目录到 Python 路径
current_file = os.path.abspath(__file__)
project_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.dirname(current_file))))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from core.logger.index import setup_logger

LOGGER = setup_logger('RunRoutes')

CURVE_NAMES = ('cumulative_accuracy', 'lower_bound')
COMMANDS = ('train', 'audit', 'verify')


def register_run_routes(app: Flask) -> None:
    """
    注册运行结果相关的路由

    Args:
        app: Flask 应用实例
    """

    @app.route('/test', methods=['GET', 'POST'])
    def test_handler() -> tuple[Dict[str, Any], int]:
        return create_success_response({"status": "ok", "runsDir": runs_dir()})

    @app.route('/api', methods=['POST'])
    def api_handler() -> tuple[Dict[str, Any], int]:
        """
        统一的 API 处理器
        根据 body 中的 method 字段分发到具体的处理函数
        """
        try:
            if not request.is_json:
                return create_error_response("请求必须是 JSON 格式", 400)

            body = request.get_json(silent=True)
            if not body:
                return create_error_response("请求体不能为空", 400)

            method = body.get('method')
            if not method:
                return create_error_response("缺少必要的 method 参数", 400)

            data = body.get('data') or {}

            if method == 'listRuns':
                return handle_list_runs(data)
            elif method == 'getRun':
                return handle_get_run(data)
            elif method == 'getCurve':
                return handle_get_curve(data)
            else:
                return create_error_response(f"不支持的方法：{method}", 400)

        except Exception as e:
            LOGGER.error(f"处理请求时发生错误：{e}")
            return create_error_response(f"处理请求时发生错误：{str(e)}", 500)


def create_success_response(data: Any, message: str = "") -> tuple[Dict[str, Any], int]:
    response = {
        "success": True,
        "message": message,
        "data": data
    }
    return response, 200


def create_error_response(message: str, status_code: int = 500) -> tuple[Dict[str, Any], int]:
    response = {
        "success": False,
        "message": message,
        "data": None
    }
    return response, status_code


def runs_dir() -> str:
    return current_app.config['RUNS_DIR']


def _run_path(run_id: Any) -> Optional[str]:
    """run id 只能是 runs 目录下的一级目录名"""
    if not isinstance(run_id, str) or not run_id or run_id in ('.', '..') or os.sep in run_id or '/' in run_id:
        return None
    path = os.path.join(runs_dir(), run_id)
    if not os.path.isfile(os.path.join(path, 'manifest.json')):
        return None
    return path


def _read_manifest(path: str) -> Dict[str, Any]:
    with open(os.path.join(path, 'manifest.json'), 'r', encoding='utf-8') as f:
        return json.load(f)


def list_run_ids() -> List[str]:
    root = runs_dir()
    if not os.path.isdir(root):
        return []
    return sorted(name for name in os.listdir(root) if os.path.isfile(os.path.join(root, name, 'manifest.json')))


def handle_list_runs(data: Dict[str, Any]) -> tuple[Dict[str, Any], int]:
    """
    处理 listRuns 请求

    Args:
        data: page / pageSize / command（可选，按 train / audit / verify 过滤）
    """
    page = data.get('page', 1)
    page_size = data.get('pageSize', 20)
    command = data.get('command')

    if not isinstance(page, int) or page < 1:
        return create_error_response("page 参数必须是大于 0 的整数", 400)
    if not isinstance(page_size, int) or page_size < 1 or page_size > 100:
        return create_error_response("pageSize 参数必须是 1-100 之间的整数", 400)
    if command is not None and command not in COMMANDS:
        return create_error_response(f"command 参数必须是以下值之一：{', '.join(COMMANDS)}", 400)

    runs = []
    for run_id in list_run_ids():
        manifest = _read_manifest(os.path.join(runs_dir(), run_id))
        if command and manifest.get('command') != command:
            continue
        runs.append({"id": run_id, **manifest})

    total = len(runs)
    total_pages = (total + page_size - 1) // page_size
    offset = (page - 1) * page_size
    return create_success_response({
        "runs": runs[offset:offset + page_size],
        "pagination": {
            "page": page,
            "pageSize": page_size,
            "total": total,
            "totalPages": total_pages,
            "hasNext": page < total_pages,
            "hasPrev": page > 1
        }
    })


def handle_get_run(data: Dict[str, Any]) -> tuple[Dict[str, Any], int]:
    """返回运行清单，训练运行附带 model.json"""
    path = _run_path(data.get('id'))
    if path is None:
        return create_error_response(f"运行不存在：{data.get('id')}", 404)

    result: Dict[str, Any] = {"id": data['id'], "manifest": _read_manifest(path), "model": None}
    model_path = os.path.join(path, 'model.json')
    if os.path.isfile(model_path):
        with open(model_path, 'r', encoding='utf-8') as f:
            result["model"] = json.load(f)
    return create_success_response(result)


def handle_get_curve(data: Dict[str, Any]) -> tuple[Dict[str, Any], int]:
    """返回曲线 CSV 的逐行记录"""
    name = data.get('name')
    if name not in CURVE_NAMES:
        return create_error_response(f"name 参数必须是以下值之一：{', '.join(CURVE_NAMES)}", 400)

    path = _run_path(data.get('id'))
    if path is None:
        return create_error_response(f"运行不存在：{data.get('id')}", 404)

    csv_path = os.path.join(path, f'{name}.csv')
    if not os.path.isfile(csv_path):
        return create_error_response(f"该运行没有曲线：{name}", 404)

    frame = pd.read_csv(csv_path)
    return create_success_response({"id": data['id'], "name": name, "points": frame.to_dict(orient='records')})
