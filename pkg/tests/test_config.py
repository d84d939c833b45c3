"""Tests for configuration resolution, CLI parsing helpers, state files and summaries"""
import math
import os
import tempfile

from helpers import assert_raises, random_adapter
from cli_utils import flatten_tokens, parse_overrides, parse_seed_args, parse_threshold, parse_thresholds
from config import (
    ExperimentConfig, default_output_dir, load_config, load_experiment_file, resolve_experiment_config,
)
from errors import ConfigError, IncompleteArtifactsError
from state import load_report, load_snapshots, save_report, save_snapshots
from utils import format_mean_std, mean_std


def _write(path, text):
    with open(path, 'w') as f:
        f.write(text)


def test_default_table_resolves():
    cfg = resolve_experiment_config(load_config())
    assert cfg.method == 'acmap' and cfg.early_stop == math.inf
    assert cfg.seeds == [1993, 1994, 1995, 1996, 1997]
    assert cfg.train_config(5).seed == 5
    assert cfg.stream_spec(5).seed == 5
    assert cfg.backbone_config(32).seed == 0


def test_precedence_defaults_preset_file_overrides():
    defaults = load_config()
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'exp.cfg')
        _write(path, "# smoke test\n\ntrain.epochs=5\nmethod = acmap_no_cm\nearly_stop=3\n")
        file_values = load_experiment_file(path)
    cfg = resolve_experiment_config(defaults, file_values, {'train.epochs': '2'}, preset='cifar')
    assert cfg.train['epochs'] == 2
    assert cfg.train['learning_rate'] == 0.025 and cfg.train['batch_size'] == 48
    assert cfg.method == 'acmap_no_cm' and cfg.early_stop == 3
    assert cfg.preset == 'cifar'


def test_experiment_file_errors():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'bad.cfg')
        _write(path, "train.epochs 5\n")
        assert_raises(ConfigError, load_experiment_file, path)
        assert_raises(ConfigError, load_experiment_file, os.path.join(tmp, 'missing.cfg'))
        _write(path, "{not json")
        assert_raises(ConfigError, load_config, path)


def test_invalid_values_are_config_errors():
    defaults = load_config()
    for overrides in ({'method': 'bogus'}, {'train.epochs': '0'}, {'train.epochs': 'many'},
                      {'nope.key': '1'}, {'early_stop': '0'}, {'adapter.rank': '64'},
                      {'prototype_split': 'val'}, {'seeds': 'x'}):
        assert_raises(ConfigError, resolve_experiment_config, defaults, None, overrides)
    assert_raises(ConfigError, resolve_experiment_config, defaults, preset='mnist')


def test_validation_split_of_an_embedding_file_must_be_nonempty():
    defaults = load_config()
    embedded = {'embedding_file': 'features.acmemb', 'prototype_split': 'val'}
    assert_raises(ConfigError, resolve_experiment_config, defaults, None, embedded)
    cfg = resolve_experiment_config(defaults, None, {**embedded, 'split.val_fraction': '0.2'})
    assert cfg.split_spec(3).val_fraction == 0.2


def test_config_dict_roundtrip():
    cfg = resolve_experiment_config(load_config(), overrides={'early_stop': '4', 'ablation.thresholds': 'inf,2'})
    assert cfg.ablation['thresholds'] == [math.inf, 2]
    data = cfg.to_dict()
    assert data['early_stop'] == 4 and data['ablation']['thresholds'] == ['inf', 2]
    assert ExperimentConfig.from_dict(data) == cfg
    assert_raises(ConfigError, ExperimentConfig.from_dict, {**data, 'colour': 'blue'})


def test_for_run_copies():
    cfg = resolve_experiment_config(load_config())
    other = cfg.for_run(method='simplecil', seeds=[7])
    other.train['epochs'] = 99
    assert cfg.train['epochs'] == 20 and cfg.method == 'acmap'
    assert other.seeds == [7]


def test_output_dir_from_environment():
    previous = os.environ.get('ACMAP_OUTPUT_DIR')
    try:
        os.environ['ACMAP_OUTPUT_DIR'] = '/tmp/acmap-out'
        assert default_output_dir() == '/tmp/acmap-out'
        del os.environ['ACMAP_OUTPUT_DIR']
        assert default_output_dir() == 'runs'
    finally:
        if previous is not None:
            os.environ['ACMAP_OUTPUT_DIR'] = previous


def test_cli_token_helpers():
    assert flatten_tokens(['1,2', ' 3 ', '', '4,']) == ['1', '2', '3', '4']
    assert parse_seed_args(['1993,1994', '7']) == [1993, 1994, 7]
    assert parse_seed_args(None) is None
    assert_raises(ConfigError, parse_seed_args, ['a'])
    assert parse_threshold('inf') == math.inf and parse_threshold('none') == math.inf
    assert parse_threshold('3') == 3 and parse_threshold(5) == 5
    assert parse_thresholds(['1,inf']) == [1, math.inf]
    for bad in ('0', '-2', 'soon', 2.5):
        assert_raises(ConfigError, parse_threshold, bad)
    assert parse_overrides(['train.epochs=5', 'method = acmap']) == {'train.epochs': '5', 'method': 'acmap'}
    assert_raises(ConfigError, parse_overrides, ['train.epochs'])


def test_report_files():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'nested', 'report.json')
        save_report({'avg_accuracy': 0.1 + 0.2}, path)
        assert load_report(path) == {'avg_accuracy': 0.1 + 0.2}
        assert load_report(os.path.join(tmp, 'absent.json')) is None
        assert not [n for n in os.listdir(os.path.dirname(path)) if n.startswith('.tmp_')]


def test_snapshot_directory_roundtrip():
    snapshots = [random_adapter(0), random_adapter(1)]
    with tempfile.TemporaryDirectory() as tmp:
        manifest = save_snapshots(snapshots, {1: 1, 2: 2, 3: 2}, tmp, extra={'seed': 3})
        assert manifest['snapshots'] == ['A1.acmadpt', 'A2.acmadpt'] and manifest['seed'] == 3
        loaded, task_snapshots, _ = load_snapshots(tmp)
        assert task_snapshots == {1: 1, 2: 2, 3: 2}
        assert all(a.equals(b) for a, b in zip(loaded, snapshots))
        os.remove(os.path.join(tmp, 'A2.acmadpt'))
        assert_raises(IncompleteArtifactsError, load_snapshots, tmp)
        assert_raises(IncompleteArtifactsError, load_snapshots, os.path.join(tmp, 'none'))


def test_mean_std_summaries():
    assert mean_std([]) == (None, None)
    assert mean_std([0.5]) == (0.5, 0.0)
    mean, std = mean_std([0.5, 0.7])
    assert abs(mean - 0.6) <= 1e-15 and abs(std - math.sqrt(0.02)) <= 1e-15
    assert format_mean_std([0.5, 0.7]) == "60.00 ± 14.14"
    assert format_mean_std([]) == "n/a"
