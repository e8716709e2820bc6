# 这个文件的作用是下载公开数据集：compas（ProPublica 的 compas-scores-two-years.csv）和 adult（UCI 的 adult.data / adult.test），
# 地址在 config/default.yaml 的 datasets 段，文件保存到 paths.data_dir 下，已存在的文件默认跳过。

import sys
import os
import argparse
from typing import Dict, Any, List, Optional

import requests

# 添加项目根目录到 Python 路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.config.index import PROJECT_ROOT, get_config
from core.logger.index import setup_logger
from core.model.errors import DataFormatError

CHUNK_SIZE = 1 << 16


class DatasetCollector:
    """公开数据集下载器"""

    def __init__(self, config: Optional[Dict[str, Any]] = None, session: Optional[requests.Session] = None):
        config = config if config is not None else get_config()
        section = dict(config.get('datasets') or {})
        self.timeout = float(section.pop('timeout', 60))
        self.sources: Dict[str, List[str]] = {name: list(urls) for name, urls in section.items()}
        self.data_dir = os.path.join(PROJECT_ROOT, (config.get('paths') or {}).get('data_dir', 'data'))
        self.session = session or requests.Session()
        self.logger = setup_logger('DatasetCollector')

    def names(self) -> List[str]:
        return sorted(self.sources)

    def _fetch(self, url: str, path: str) -> None:
        """下载到临时文件，完成后再改名，避免留下半个文件"""
        tmp_path = path + '.part'
        try:
            self.logger.info(f"正在下载 {url} ...")
            with self.session.get(url, stream=True, timeout=self.timeout) as response:
                response.raise_for_status()
                with open(tmp_path, 'wb') as f:
                    for chunk in response.iter_content(chunk_size=CHUNK_SIZE):
                        if chunk:
                            f.write(chunk)
            os.replace(tmp_path, path)
        except requests.exceptions.RequestException as e:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            self.logger.error(f"下载失败：{url}：{e}")
            raise DataFormatError(f"下载失败：{url}：{e}")

    def download_dataset(self, name: str, target_dir: Optional[str] = None, force: bool = False) -> List[str]:
        """
        下载一个数据集
        Args:
            name: compas / adult
            target_dir: 保存目录，默认 paths.data_dir
            force: 为 True 时覆盖已存在的文件
        Returns:
            本地文件路径列表（与配置中的地址顺序一致）
        """
        if name not in self.sources:
            raise ValueError(f"未知的数据集：{name}，可选：{self.names()}")

        target_dir = target_dir or self.data_dir
        os.makedirs(target_dir, exist_ok=True)

        paths = []
        for url in self.sources[name]:
            path = os.path.join(target_dir, url.rstrip('/').split('/')[-1])
            if os.path.exists(path) and not force:
                self.logger.info(f"已存在，跳过：{path}")
            else:
                self._fetch(url, path)
                self.logger.info(f"✅ 已保存：{path}")
            paths.append(path)
        return paths


def download_dataset(name: str, target_dir: Optional[str] = None, force: bool = False) -> List[str]:
    return DatasetCollector().download_dataset(name, target_dir, force)


def parse_arguments():
    """解析命令行参数"""
    parser = argparse.ArgumentParser(description='下载公开数据集')
    parser.add_argument('--name', '-n', type=str, required=True, help='数据集名称：compas / adult / all')
    parser.add_argument('--target-dir', '-t', type=str, help='保存目录（默认：paths.data_dir）')
    parser.add_argument('--force', '-f', action='store_true', help='覆盖已存在的文件')
    return parser.parse_args()


def main():
    """主函数"""
    args = parse_arguments()
    collector = DatasetCollector()
    names = collector.names() if args.name == 'all' else [args.name]

    print(f"📊 开始下载数据集：{names}")
    print("=" * 50)
    try:
        for name in names:
            for path in collector.download_dataset(name, args.target_dir, args.force):
                print(f"   {name}：{path}")
        print("=" * 50)
        print(f"✅ 下载完成！")
        return 0
    except KeyboardInterrupt:
        print("\n⚠️  用户中断操作")
        return 1
    except Exception as e:
        print(f"❌ 下载失败：{e}")
        return 1


if __name__ == "__main__":
    exit(main())
