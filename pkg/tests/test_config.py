"""
配置读取与线程数
"""

import json

import pytest

from core.config.index import ConfigManager, load_config_file, worker_count, get_section


class TestConfigManager:

    def test_default_sections_present(self):
        for name in ('oracle', 'pf_exact', 'hpf', 'greedy', 'befair', 'audit', 'verify', 'paths', 'server'):
            assert isinstance(get_section(name), dict)

    def test_caches_until_reload(self, tmp_path):
        path = tmp_path / 'c.yaml'
        path.write_text('hpf:\n  rounds: 3\n', encoding='utf-8')
        manager = ConfigManager(str(path))
        assert manager.get_section('hpf')['rounds'] == 3
        path.write_text('hpf:\n  rounds: 7\n', encoding='utf-8')
        assert manager.get_section('hpf')['rounds'] == 3
        assert manager.reload_config()['hpf']['rounds'] == 7

    def test_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / 'env.yaml'
        path.write_text('greedy:\n  tie_break: highest_index\n', encoding='utf-8')
        monkeypatch.setenv('BEFAIR_CONFIG', str(path))
        assert ConfigManager().get_section('greedy')['tie_break'] == 'highest_index'

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ConfigManager(str(tmp_path / 'missing.yaml')).get_config()

    def test_missing_section_is_empty(self, tmp_path):
        path = tmp_path / 'c.yaml'
        path.write_text('hpf:\n  rounds: 3\n', encoding='utf-8')
        assert ConfigManager(str(path)).get_section('befair') == {}


class TestLoadConfigFile:

    def test_reads_json(self, tmp_path):
        path = tmp_path / 'c.json'
        path.write_text(json.dumps({"befair": {"delta": 1.1}}), encoding='utf-8')
        assert load_config_file(str(path)) == {"befair": {"delta": 1.1}}

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'empty.yaml'
        path.write_text('', encoding='utf-8')
        assert load_config_file(str(path)) == {}

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / 'list.yaml'
        path.write_text('- 1\n- 2\n', encoding='utf-8')
        with pytest.raises(ValueError):
            load_config_file(str(path))


class TestWorkerCount:

    def test_env_caps_threads(self, monkeypatch):
        monkeypatch.setenv('BEFAIR_THREADS', '3')
        assert worker_count() == 3

    def test_invalid_env_falls_back(self, monkeypatch):
        monkeypatch.setenv('BEFAIR_THREADS', 'many')
        assert 1 <= worker_count() <= 8

    def test_at_least_one(self, monkeypatch):
        monkeypatch.setenv('BEFAIR_THREADS', '0')
        assert worker_count() == 1
