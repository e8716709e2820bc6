"""
路由注册
"""

from flask import Flask
from .run_routes import register_run_routes


def register_routes(app: Flask) -> None:
    # 目前只有运行结果一组路由
    register_run_routes(app)
