"""
命令行：参数解析、退出码、运行产物
"""

import json
import os

import pandas as pd
import pytest

import core.verify.index as verify_index
from core.cli.index import (
    EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_WITNESS, UsageError, RunManifest,
    parse_delta_list, parse_gamma_grid, parse_seed_range, derive_seeds, config_hash, load_run_config, main,
)
from core.verify.index import TheoremReport


class TestParsers:

    def test_delta_ellipsis(self):
        assert parse_delta_list('1.0,1.05,...,1.30') == [1.0, 1.05, 1.1, 1.15, 1.2, 1.25, 1.3]

    def test_delta_plain_list(self):
        assert parse_delta_list('1, 1.5') == [1.0, 1.5]

    @pytest.mark.parametrize('text', ['1.0,...,1.3', '1.0,1.05,...', 'a,b', '1.1,1.0,...,0.5', '1.0,1.05,...,1.32', ''])
    def test_delta_rejects(self, text):
        with pytest.raises(UsageError):
            parse_delta_list(text)

    def test_gamma_grid(self):
        grid = parse_gamma_grid('0:0.05:0.5')
        assert len(grid) == 11
        assert grid[0] == 0.0 and grid[-1] == 0.5

    def test_gamma_list(self):
        assert parse_gamma_grid('0,0.1') == [0.0, 0.1]

    @pytest.mark.parametrize('text', ['0:0:1', '1:0.1:0', 'x:y:z'])
    def test_gamma_rejects(self, text):
        with pytest.raises(UsageError):
            parse_gamma_grid(text)

    def test_seed_range(self):
        assert parse_seed_range('0..199') == [0, 199]
        assert parse_seed_range('7') == [7, 7]
        with pytest.raises(UsageError):
            parse_seed_range('9..3')

    def test_derived_seeds(self):
        seeds = derive_seeds(0)
        assert set(seeds) == {'data', 'oracle', 'befair', 'audit'}
        assert len(set(seeds.values())) == 4
        assert seeds == derive_seeds(0)
        assert seeds != derive_seeds(1)


class TestConfig:

    def test_hash_ignores_key_order(self):
        assert config_hash({'a': 1, 'b': {'c': 2}}) == config_hash({'b': {'c': 2}, 'a': 1})

    def test_user_file_overrides_by_section(self, fast_config):
        config = load_run_config(fast_config)
        assert config['hpf']['rounds'] == 5
        assert config['befair']['delta'] == 1.0
        assert config['oracle']['l2_reg'] == 0.0001

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError):
            load_run_config(str(tmp_path / 'none.yaml'))

    def test_manifest_stage_records_ms(self, tmp_path):
        manifest = RunManifest('train', 'abc', 0)
        with manifest.stage('load'):
            pass
        manifest.write_json(str(tmp_path), 'x.json', {'v': 1})
        manifest.save(str(tmp_path))
        data = json.loads((tmp_path / 'manifest.json').read_text(encoding='utf-8'))
        assert data['outputs'] == ['x.json']
        assert data['timings']['load'] >= 0


class TestVerifyCommand:

    def test_examples_pass(self, fast_config, tmp_path):
        out = str(tmp_path / 'verify')
        assert main(['--config', fast_config, '--out', out, 'verify', '--suite', 'examples']) == EXIT_OK
        report = json.loads(open(os.path.join(out, 'examples.json'), encoding='utf-8').read())
        assert report['passed']
        manifest = json.loads(open(os.path.join(out, 'manifest.json'), encoding='utf-8').read())
        assert manifest['command'] == 'verify' and manifest['summary']['passed']

    def test_enumeration_guard_is_usage_error(self, tmp_path):
        assert main(['--out', str(tmp_path), 'verify', '--suite', 'theorems', '--max-n', '25']) == EXIT_USAGE

    def test_witness_exit_code(self, tmp_path, monkeypatch):
        failing = TheoremReport('thm_pf', 1, -0.5, [{"seed": 3, "instance": "x", "subset": [0], "slack": -0.5}])
        monkeypatch.setattr(verify_index, 'run_suite', lambda suite, cfg: [failing])
        assert main(['--out', str(tmp_path), 'verify', '--suite', 'theorems']) == EXIT_WITNESS
        assert os.path.exists(tmp_path / 'thm_pf.json')

    def test_bad_seed_range(self, tmp_path):
        assert main(['--out', str(tmp_path), 'verify', '--seeds', '5..1']) == EXIT_USAGE


class TestTrainCommand:

    def test_pf_exact(self, tmp_path):
        matrix = tmp_path / 'U.csv'
        matrix.write_text('h1,h1c,h2,h2c\n1,0,0,1\n1,0,1,0\n0,1,1,0\n', encoding='utf-8')
        out = tmp_path / 'pf'
        code = main(['--out', str(out), 'train', '--method', 'pf-exact', '--utility-matrix', str(matrix)])
        assert code == EXIT_OK
        model = json.loads((out / 'model.json').read_text(encoding='utf-8'))
        assert len(model['support']) == 4
        assert sum(model['probs']) == pytest.approx(1.0)

    def test_pf_exact_needs_matrix(self, tmp_path):
        assert main(['--out', str(tmp_path), 'train', '--method', 'pf-exact']) == EXIT_USAGE

    def test_unknown_method(self, tmp_path):
        assert main(['--out', str(tmp_path), 'train', '--method', 'svm']) == EXIT_USAGE

    def test_missing_dataset_file_fails(self, tmp_path):
        code = main(['--out', str(tmp_path), 'train', '--method', 'erm', '--dataset', str(tmp_path / 'none.json')])
        assert code == EXIT_FAILURE

    def test_missing_csv_is_usage_error(self, tmp_path):
        code = main(['--out', str(tmp_path), 'train', '--method', 'erm', '--data', str(tmp_path / 'none.csv')])
        assert code == EXIT_USAGE


class TestTrainThenAudit:

    def _train(self, fast_config, small_csv, out):
        csv, schema = small_csv
        return main(['--config', fast_config, '--out', str(out), 'train', '--method', 'hpf',
                     '--data', csv, '--dataset-config', schema, '--rounds', '3'])

    def _audit(self, fast_config, small_csv, model, out):
        csv, schema = small_csv
        return main(['--config', fast_config, '--out', str(out), 'audit', '--model', str(model),
                     '--data', csv, '--dataset-config', schema, '--delta', '1.0,1.1', '--curves'])

    def test_train_writes_model_and_manifest(self, fast_config, small_csv, tmp_path):
        out = tmp_path / 'train'
        assert self._train(fast_config, small_csv, out) == EXIT_OK
        manifest = json.loads((out / 'manifest.json').read_text(encoding='utf-8'))
        assert manifest['summary']['method'] == 'hpf'
        assert manifest['summary']['rounds'] == 3
        assert 'model.json' in manifest['outputs']
        assert set(manifest['timings']) == {'load', 'train'}

    def test_audit_outputs_are_reproducible(self, fast_config, small_csv, tmp_path):
        train_out = tmp_path / 'train'
        assert self._train(fast_config, small_csv, train_out) == EXIT_OK
        model = train_out / 'model.json'

        first, second = tmp_path / 'audit1', tmp_path / 'audit2'
        assert self._audit(fast_config, small_csv, model, first) == EXIT_OK
        assert self._audit(fast_config, small_csv, model, second) == EXIT_OK
        for name in ('mae.csv', 'cumulative_accuracy.csv', 'lower_bound.csv'):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_audit_reports_both_splits(self, fast_config, small_csv, tmp_path):
        train_out = tmp_path / 'train'
        assert self._train(fast_config, small_csv, train_out) == EXIT_OK
        out = tmp_path / 'audit'
        assert self._audit(fast_config, small_csv, train_out / 'model.json', out) == EXIT_OK

        mae = pd.read_csv(out / 'mae.csv')
        assert list(mae.columns) == ['split', 'delta', 'mae']
        assert list(mae['split']) == ['train', 'train', 'test', 'test']
        assert list(mae['delta']) == [1.0, 1.1, 1.0, 1.1]

        audit = json.loads((out / 'audit.json').read_text(encoding='utf-8'))
        assert audit['curve_split'] == 'test'
        assert audit['splits']['train']['n'] == 40 and audit['splits']['test']['n'] == 10
        for split in ('train', 'test'):
            assert 0.0 <= audit['splits'][split]['overall_accuracy'] <= 1.0
            assert len(audit['splits'][split]['mae']) == 2
        assert pd.read_csv(out / 'cumulative_accuracy.csv')['subset_size'].iloc[-1] == 10

    def test_split_selects_curve_data(self, fast_config, small_csv, tmp_path):
        train_out = tmp_path / 'train'
        assert self._train(fast_config, small_csv, train_out) == EXIT_OK
        csv, schema = small_csv
        out = tmp_path / 'audit'
        code = main(['--config', fast_config, '--out', str(out), 'audit', '--model', str(train_out / 'model.json'),
                     '--data', csv, '--dataset-config', schema, '--delta', '1.0', '--curves', '--split', 'train'])
        assert code == EXIT_OK
        assert pd.read_csv(out / 'cumulative_accuracy.csv')['subset_size'].iloc[-1] == 40
        assert json.loads((out / 'audit.json').read_text(encoding='utf-8'))['curve_split'] == 'train'

    def test_audit_missing_model(self, fast_config, small_csv, tmp_path):
        assert self._audit(fast_config, small_csv, tmp_path / 'none.json', tmp_path / 'a') == EXIT_USAGE
