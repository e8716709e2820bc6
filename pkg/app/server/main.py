#!/usr/bin/env python3
"""
结果浏览 HTTP 服务器
只读地暴露 runs 目录下的训练 / 审计 / 验证结果
"""

import argparse
import os
import sys
from typing import Optional
from flask import Flask
from flask_cors import CORS

# 项目根目录在 app/server 之上两级
current_file = os.path.abspath(__file__)
project_root = os.path.dirname(os.path.dirname(os.path.dirname(current_file)))
sys.path.insert(0, project_root)

from core.config.index import PROJECT_ROOT, get_config
from app.server.routes import register_routes


def create_app(runs_dir: Optional[str] = None) -> Flask:
    """
    创建并配置 Flask 应用程序

    Args:
        runs_dir: 运行结果目录，默认取配置中的 paths.runs_dir（相对项目根目录）
    """
    app = Flask(__name__)

    if runs_dir is None:
        paths = get_config().get('paths') or {}
        runs_dir = os.path.join(PROJECT_ROOT, paths.get('runs_dir', 'runs'))
    app.config['RUNS_DIR'] = runs_dir

    CORS(app,
         origins="*",
         methods=["GET", "POST", "OPTIONS"],
         allow_headers=["Content-Type", "X-Requested-With"])

    register_routes(app)
    return app


def parse_arguments():
    """解析命令行参数"""
    parser = argparse.ArgumentParser(description='只读浏览训练 / 审计 / 验证结果')
    parser.add_argument('--runs-dir', '-r', type=str, help='结果目录（默认：paths.runs_dir）')
    parser.add_argument('--port', '-p', type=int, help='监听端口（默认：server.port）')
    parser.add_argument('--host', type=str, default='127.0.0.1', help='监听地址')
    return parser.parse_args()


def main():
    """启动结果浏览服务"""
    args = parse_arguments()
    port = args.port or (get_config().get('server') or {}).get('port', 8081)
    app = create_app(args.runs_dir)
    runs = app.config['RUNS_DIR']

    print(f"🚀 结果浏览服务启动中...")
    print(f"📁 结果目录：{runs}")
    if not os.path.isdir(runs):
        print(f"⚠️  结果目录不存在，列表会为空；先运行 ./run.sh train / audit / verify")
    print(f"🌐 地址：http://{args.host}:{port}  （健康检查 /test，接口 POST /api）")
    print("按 Ctrl+C 停止")

    try:
        app.run(host=args.host, port=port, debug=False, use_reloader=False)
    except OSError as e:
        print(f"❌ 端口 {port} 无法监听：{e}")
        sys.exit(1)


if __name__ == '__main__':
    main()
