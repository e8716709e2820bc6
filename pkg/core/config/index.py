# 这个文件的作用是读取配置文件，默认配置在 config 目录下的 default.yaml
# 读取 default.yaml，转换成一个 dict 放在内存里，暴露 get_config 方法；未加载过则加载，加载过直接返回
# 环境变量 BEFAIR_CONFIG 可以指向另一个 yaml 文件，BEFAIR_THREADS 限制线程池大小

import os
import json
import yaml
from typing import Dict, Any, Optional


PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
DEFAULT_CONFIG_PATH = os.path.join(PROJECT_ROOT, 'config', 'default.yaml')


class ConfigManager:
    """配置管理器，负责读取和管理配置文件"""

    def __init__(self, config_file_path: Optional[str] = None):
        self._config: Optional[Dict[str, Any]] = None
        self._config_file_path = config_file_path

    @property
    def config_file_path(self) -> str:
        return self._config_file_path or os.environ.get('BEFAIR_CONFIG') or DEFAULT_CONFIG_PATH

    def _load_config(self) -> Dict[str, Any]:
        """加载配置文件并转换为字典"""
        path = self.config_file_path
        if not os.path.exists(path):
            raise FileNotFoundError(f"配置文件不存在：{path}")
        return load_config_file(path)

    def get_config(self) -> Dict[str, Any]:
        """
        获取配置信息
        如果配置未加载过，则加载配置文件；如果已加载过，则直接返回缓存的配置
        """
        if self._config is None:
            self._config = self._load_config()

        return dict(self._config)  # 返回浅拷贝，避免外部修改影响内部状态

    def get_section(self, name: str) -> Dict[str, Any]:
        """获取某一段配置，不存在时返回空字典"""
        section = self.get_config().get(name) or {}
        return dict(section)

    def reload_config(self) -> Dict[str, Any]:
        """重新加载配置文件"""
        self._config = None
        return self.get_config()

    def get_config_as_json(self) -> str:
        """获取配置信息的 JSON 字符串表示"""
        return json.dumps(self.get_config(), ensure_ascii=False, indent=2, sort_keys=True)


def load_config_file(path: str) -> Dict[str, Any]:
    """
    读取用户配置文件，支持 yaml 和 json（json 是 yaml 的子集，统一用 safe_load 解析）
    Args:
        path: 配置文件路径
    Returns:
        配置字典，空文件返回 {}
    """
    try:
        with open(path, 'r', encoding='utf-8') as file:
            data = yaml.safe_load(file)
    except yaml.YAMLError as e:
        raise ValueError(f"配置文件格式错误：{path}: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"配置文件顶层必须是对象：{path}")
    return data


def worker_count() -> int:
    """线程池大小，受 BEFAIR_THREADS 限制"""
    default = min(8, os.cpu_count() or 1)
    raw = os.environ.get('BEFAIR_THREADS')
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


# 创建全局配置管理器实例
_config_manager = ConfigManager()


def get_config() -> Dict[str, Any]:
    """获取配置信息的便捷函数"""
    return _config_manager.get_config()


def get_section(name: str) -> Dict[str, Any]:
    """获取某一段配置的便捷函数，例如 get_section('oracle')"""
    return _config_manager.get_section(name)


def get_config_as_json() -> str:
    """获取配置信息的 JSON 字符串表示的便捷函数"""
    return _config_manager.get_config_as_json()


if __name__ == "__main__":
    print(get_config_as_json())
