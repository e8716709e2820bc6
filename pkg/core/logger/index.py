"""
日志工具
所有模块统一通过 setup_logger 获取带 StreamHandler 的命名 logger
"""

import logging
import sys
import os

sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
from core.config.index import get_section


LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _configured_level() -> int:
    try:
        level_name = str(get_section('logging').get('level', 'INFO')).upper()
    except Exception:
        level_name = 'INFO'
    return getattr(logging, level_name, logging.INFO)


def setup_logger(name: str) -> logging.Logger:
    """设置日志记录器，重复调用不会重复添加 handler"""
    logger = logging.getLogger(name)
    logger.setLevel(_configured_level())

    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)

    return logger
