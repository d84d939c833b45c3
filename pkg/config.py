import copy
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace

from dotenv import load_dotenv

from adapters import AdapterConfig, TrainConfig
from backbone import BackboneConfig
from cli_utils import parse_seed_args, parse_threshold
from errors import ConfigError
from harness import SplitSpec, StreamSpec

# Load environment variables from .env file
load_dotenv()

METHODS = ('acmap', 'acmap_no_ir', 'acmap_no_cm', 'acmap_no_ir_no_cm', 'simplecil', 'ensemble')
PROTOTYPE_SPLITS = ('train', 'val')
DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'config', 'config.json')


def load_config(config_path=DEFAULT_CONFIG_PATH):
    """Load the defaults table"""
    try:
        with open(config_path, 'r') as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {config_path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {config_path} is not valid JSON: {e}")


def default_output_dir():
    """Output directory from ACMAP_OUTPUT_DIR, falling back to 'runs'"""
    return os.getenv('ACMAP_OUTPUT_DIR') or 'runs'


def load_experiment_file(path):
    """
    Parse a flat key=value experiment file

    Blank lines and lines starting with '#' are ignored. Keys may be dotted
    (``train.epochs=5``). Values stay strings until resolved against the
    defaults table.
    """
    values = {}
    try:
        with open(path, 'r') as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read experiment file {path}: {e}")
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{number}: expected key=value, got '{line}'")
        values[key.strip()] = value.strip()
    return values


def _coerce(key, raw, default):
    """Convert a string override to the type of the default it replaces"""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if key == 'early_stop':
            return parse_threshold(text)
        if key == 'seeds':
            return parse_seed_args([text]) or []
        if isinstance(default, bool):
            if text.lower() not in ('true', 'false', '1', '0', 'yes', 'no'):
                raise ValueError(text)
            return text.lower() in ('true', '1', 'yes')
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, list):
            return [t.strip() for t in text.split(',') if t.strip()]
        if default is None and text.lower() in ('', 'none', 'null'):
            return None
    except ValueError:
        raise ConfigError(f"'{key}' expects a value like {default!r}, got '{raw}'")
    return text


def _apply(tree, dotted_key, raw):
    parts = dotted_key.split('.')
    node = tree
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"unknown config key '{dotted_key}'")
        node = node[part]
    leaf = parts[-1]
    if leaf not in node or isinstance(node[leaf], dict):
        raise ConfigError(f"unknown config key '{dotted_key}'")
    node[leaf] = _coerce(leaf, raw, node.get(leaf))


def _finite_or_inf(value):
    if isinstance(value, str):
        return parse_threshold(value)
    return value


@dataclass
class ExperimentConfig:
    """
    Fully resolved experiment: method, threshold, seeds and every
    sub-configuration. ``to_dict`` is echoed into each run report.
    """
    method: str = 'acmap'
    early_stop: float = math.inf
    seeds: list = field(default_factory=lambda: [1993, 1994, 1995, 1996, 1997])
    prototype_split: str = 'train'
    output_dir: str = None
    embedding_file: str = None
    workers: int = 1
    verbose: bool = False
    preset: str = None
    stream: dict = field(default_factory=dict)
    split: dict = field(default_factory=dict)
    backbone: dict = field(default_factory=dict)
    adapter: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    landscape: dict = field(default_factory=lambda: {'grid_size': 11, 'first_task': 1})
    diagnostics: dict = field(default_factory=lambda: {'anchor_task': 1, 'tolerance': 0.01,
                                                       'variants': ['mapped', 'unmapped', 'sdc']})
    ablation: dict = field(default_factory=lambda: {'methods': list(METHODS[:4]), 'thresholds': []})

    def __post_init__(self):
        self.early_stop = _finite_or_inf(self.early_stop)
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got '{self.method}'")
        if not self.seeds or not all(isinstance(s, int) for s in self.seeds):
            raise ConfigError(f"seeds must be a nonempty list of integers, got {self.seeds!r}")
        if self.prototype_split not in PROTOTYPE_SPLITS:
            raise ConfigError(f"prototype_split must be one of {PROTOTYPE_SPLITS}, got '{self.prototype_split}'")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if self.landscape.get('grid_size', 2) < 2:
            raise ConfigError("landscape.grid_size must be >= 2")
        for m in self.ablation.get('methods', []):
            if m not in METHODS:
                raise ConfigError(f"ablation method '{m}' is not one of {METHODS}")
        self.ablation['thresholds'] = [parse_threshold(v) for v in self.ablation.get('thresholds', [])]
        # validate every sub-config up front
        seed = self.seeds[0]
        if self.embedding_file:
            split = self.split_spec(seed)
            if self.prototype_split == 'val' and split.val_fraction <= 0:
                raise ConfigError("prototype_split 'val' needs split.val_fraction > 0")
        else:
            spec = self.stream_spec(seed)
            if self.prototype_split == 'val' and spec.val_per_class < 1:
                raise ConfigError("prototype_split 'val' needs stream.val_per_class >= 1")
            self.backbone_config(spec.input_dim)
        rank = self.adapter_config().rank
        embed_dim = self.backbone.get('embed_dim', BackboneConfig.embed_dim)
        if rank >= embed_dim:
            raise ConfigError(f"adapter.rank={rank} must be smaller than backbone.embed_dim={embed_dim}")
        self.train_config(seed)

    def stream_spec(self, seed):
        try:
            return StreamSpec(**{**self.stream, 'seed': seed})
        except TypeError as e:
            raise ConfigError(f"stream: {e}")

    def split_spec(self, seed):
        try:
            return SplitSpec(**{**self.split, 'seed': seed})
        except TypeError as e:
            raise ConfigError(f"split: {e}")

    def backbone_config(self, input_dim):
        try:
            return BackboneConfig(**{**self.backbone, 'input_dim': input_dim})
        except TypeError as e:
            raise ConfigError(f"backbone: {e}")

    def adapter_config(self):
        try:
            return AdapterConfig(**self.adapter)
        except TypeError as e:
            raise ConfigError(f"adapter: {e}")

    def train_config(self, seed):
        try:
            return TrainConfig(**{**self.train, 'seed': seed})
        except TypeError as e:
            raise ConfigError(f"train: {e}")

    def for_run(self, method=None, early_stop=None, seeds=None):
        """Copy with a different method, threshold or seed list"""
        return replace(
            self,
            method=self.method if method is None else method,
            early_stop=self.early_stop if early_stop is None else early_stop,
            seeds=list(self.seeds if seeds is None else seeds),
            stream=dict(self.stream), split=dict(self.split), backbone=dict(self.backbone),
            adapter=dict(self.adapter), train=dict(self.train), landscape=dict(self.landscape),
            diagnostics=dict(self.diagnostics), ablation=copy.deepcopy(self.ablation),
        )

    def to_dict(self):
        data = copy.deepcopy(asdict(self))
        data['early_stop'] = 'inf' if self.early_stop == math.inf else int(self.early_stop)
        data['ablation']['thresholds'] = ['inf' if v == math.inf else v for v in self.ablation['thresholds']]
        return data

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown experiment keys {unknown}")
        return cls(**copy.deepcopy(data))


def resolve_experiment_config(defaults, file_values=None, overrides=None, preset=None):
    """
    Merge defaults < experiment file < CLI overrides into an ExperimentConfig

    Args:
        defaults: the JSON defaults table (``load_config``)
        file_values: dotted key -> string from ``load_experiment_file``
        overrides: dotted key -> value from the command line
        preset: optional name under ``training_presets`` applied to ``train``

    Returns:
        ExperimentConfig
    """
    tree = copy.deepcopy(defaults)
    presets = tree.pop('training_presets', {})
    if preset is not None:
        if preset not in presets:
            raise ConfigError(f"unknown preset '{preset}', expected one of {sorted(presets)}")
        tree['train'].update(presets[preset])
        tree['preset'] = preset
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            _apply(tree, key, value)
    return ExperimentConfig.from_dict(tree)
