"""
Task Stream Module
Task datasets with disjoint class sets, the exemplar-free access guard and
the seeded synthetic stream generator
"""

import math
from dataclasses import dataclass, asdict, field

import numpy as np

from errors import ConfigError, DataError
from numerics import checksum, seeded_rng

DRIFT_MODELS = ('none', 'rotation', 'offset')
SPLITS = ('train', 'val', 'eval')


def first_task_classes(base_classes, inc_classes):
    """B-m Inc-n: the first task holds m classes, or n when m == 0"""
    return base_classes if base_classes > 0 else inc_classes


def class_partition(class_ids, base_classes, inc_classes):
    """
    Split sorted class ids into tasks following B-m Inc-n

    Args:
        class_ids: sorted global class labels
        base_classes: m
        inc_classes: n

    Returns:
        list of class-id arrays, one per task
    """
    class_ids = np.asarray(class_ids)
    if base_classes < 0 or inc_classes < 0:
        raise ConfigError(f"class counts must be non-negative, got B-{base_classes} Inc-{inc_classes}")
    first = first_task_classes(base_classes, inc_classes)
    if first < 1:
        raise ConfigError("B-0 Inc-0 leaves the first task without classes")
    total = len(class_ids)
    if total < first:
        raise ConfigError(f"{total} classes cannot fill a first task of {first}")
    rest = total - first
    if rest and (inc_classes < 1 or rest % inc_classes):
        raise ConfigError(f"{total} classes are not {first} + k*{inc_classes} for any k")
    groups = [class_ids[:first]]
    for start in range(first, total, max(inc_classes, 1)):
        groups.append(class_ids[start:start + inc_classes])
    return groups


@dataclass(frozen=True)
class StreamSpec:
    n_tasks: int = 10
    base_classes: int = 0
    inc_classes: int = 5
    train_per_class: int = 100
    eval_per_class: int = 50
    val_per_class: int = 0
    input_dim: int = 32
    cluster_separation: float = 5.0
    drift_model: str = 'rotation'
    drift_amount: float = 0.15
    noise_sigma: float = 1.0
    seed: int = 1993
    n_classes: int = None
    class_subspace_dim: int = None

    def __post_init__(self):
        if not isinstance(self.n_tasks, int) or self.n_tasks < 1:
            raise ConfigError(f"stream.n_tasks must be >= 1, got {self.n_tasks!r}")
        if self.n_tasks > 1 and self.inc_classes < 1:
            raise ConfigError("stream.inc_classes must be >= 1 when there is more than one task")
        if first_task_classes(self.base_classes, self.inc_classes) < 1:
            raise ConfigError("the first task has no classes")
        if self.n_classes is not None and self.n_classes != self.total_classes:
            raise ConfigError(
                f"stream.n_classes={self.n_classes} is inconsistent with "
                f"B-{self.base_classes} Inc-{self.inc_classes} over {self.n_tasks} tasks ({self.total_classes})"
            )
        if self.train_per_class < 1 or self.eval_per_class < 1 or self.val_per_class < 0:
            raise ConfigError("every class needs at least one train and one eval sample")
        if self.input_dim < 1:
            raise ConfigError(f"stream.input_dim must be >= 1, got {self.input_dim!r}")
        if self.drift_model not in DRIFT_MODELS:
            raise ConfigError(f"stream.drift_model must be one of {DRIFT_MODELS}, got {self.drift_model!r}")
        if self.drift_model == 'rotation' and self.input_dim < 2:
            raise ConfigError("rotation drift needs input_dim >= 2")
        if self.noise_sigma < 0 or self.cluster_separation < 0:
            raise ConfigError("stream.noise_sigma and stream.cluster_separation must be non-negative")
        if self.class_subspace_dim is not None and not 1 <= self.class_subspace_dim <= self.input_dim:
            raise ConfigError(
                f"stream.class_subspace_dim must lie in 1..input_dim={self.input_dim}, got {self.class_subspace_dim!r}"
            )

    @property
    def total_classes(self):
        return first_task_classes(self.base_classes, self.inc_classes) + (self.n_tasks - 1) * self.inc_classes

    def to_dict(self):
        return asdict(self)


@dataclass
class TaskDataset:
    """One task's samples and its train/val/eval index sets"""
    task_id: int
    class_ids: np.ndarray
    x: np.ndarray
    y: np.ndarray
    train_idx: np.ndarray
    eval_idx: np.ndarray
    val_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.class_ids = np.asarray(self.class_ids)
        if not np.all(np.isin(self.y, self.class_ids)):
            raise DataError(f"task {self.task_id} has labels outside its class set")
        for name in ('train', 'eval'):
            present = np.unique(self.y[getattr(self, f"{name}_idx")])
            missing = np.setdiff1d(self.class_ids, present)
            if missing.size:
                raise DataError(f"task {self.task_id}: classes {missing.tolist()} have no {name} samples")

    def split(self, name):
        if name not in SPLITS:
            raise ConfigError(f"unknown split '{name}', expected one of {SPLITS}")
        idx = getattr(self, f"{name}_idx")
        return self.x[idx], self.y[idx]

    @property
    def train_x(self):
        return self.x[self.train_idx]

    @property
    def train_y(self):
        return self.y[self.train_idx]

    @property
    def eval_x(self):
        return self.x[self.eval_idx]

    @property
    def eval_y(self):
        return self.y[self.eval_idx]

    @property
    def n_classes(self):
        return len(self.class_ids)


class TaskStream:
    """
    Ordered task datasets handed out one phase at a time

    Training and prototype data of task t is readable only during phase t.
    Any other read is counted in ``cross_task_reads`` and refused, unless the
    stream runs in diagnostics mode, where it is counted and allowed.
    Evaluation splits of tasks seen so far are always readable.
    """

    def __init__(self, tasks, source=None, diagnostics=False):
        self.tasks = list(tasks)
        self.source = source or {}
        self.diagnostics = diagnostics
        self.phase = None
        self.cross_task_reads = 0
        seen = set()
        for task in self.tasks:
            overlap = seen.intersection(task.class_ids.tolist())
            if overlap:
                raise DataError(f"task {task.task_id} reuses classes {sorted(overlap)}")
            seen.update(task.class_ids.tolist())

    @property
    def n_tasks(self):
        return len(self.tasks)

    @property
    def input_dim(self):
        return self.tasks[0].x.shape[1]

    def begin_phase(self, t):
        if not 1 <= t <= self.n_tasks:
            raise DataError(f"task {t} is outside 1..{self.n_tasks}")
        self.phase = t

    def _guard(self, t):
        if self.phase is not None and t == self.phase:
            return
        self.cross_task_reads += 1
        if not self.diagnostics:
            raise DataError(f"exemplar-free violation: task {t} data requested during phase {self.phase}")

    def task_for_training(self, t):
        """Current-phase task dataset for adapter training"""
        self._guard(t)
        return self.tasks[t - 1]

    def prototype_split(self, t, split='train'):
        """(x, y) of task t's prototype split, current phase only"""
        self._guard(t)
        return self.tasks[t - 1].split(split)

    def eval_split(self, t):
        if self.phase is not None and t > self.phase and not self.diagnostics:
            raise DataError(f"task {t} evaluation data requested during phase {self.phase}")
        return self.tasks[t - 1].split('eval')

    def cumulative_eval(self, t):
        """Evaluation samples of tasks 1..t concatenated in task order"""
        xs, ys = zip(*(self.eval_split(i) for i in range(1, t + 1)))
        return np.concatenate(xs), np.concatenate(ys)

    def retained_split(self, t, split='eval'):
        """Diagnostics-only read of any task's data"""
        if not self.diagnostics:
            raise DataError("retained data is only readable in diagnostics mode")
        self.cross_task_reads += 1
        return self.tasks[t - 1].split(split)

    def in_diagnostics_mode(self):
        """Copy of this stream that allows (and counts) retained reads"""
        clone = TaskStream(self.tasks, source=self.source, diagnostics=True)
        return clone

    def checksum(self):
        arrays = []
        for task in self.tasks:
            arrays.extend([task.class_ids, task.x, task.y, task.train_idx, task.val_idx, task.eval_idx])
        return checksum(*arrays)


def _rotation_plane(rng, dim):
    basis, _ = np.linalg.qr(rng.standard_normal((dim, 2)))
    return basis[:, 0], basis[:, 1]


def _apply_drift(x, spec, k, plane, direction):
    if spec.drift_model == 'none' or k == 0:
        return x
    if spec.drift_model == 'offset':
        return x + spec.drift_amount * k * direction
    u, v = plane
    angle = spec.drift_amount * k
    pu = x @ u
    pv = x @ v
    cos, sin = math.cos(angle), math.sin(angle)
    return (x + np.outer(pu * (cos - 1.0) - pv * sin, u)
            + np.outer(pu * sin + pv * (cos - 1.0), v))


def generate_synthetic_stream(spec):
    """
    Seeded Gaussian-cluster task stream

    Each class is an isotropic Gaussian around a mean on the sphere of
    radius ``cluster_separation``. With ``class_subspace_dim`` = k the means
    lie in one seeded k-dimensional subspace shared by every task, and the
    remaining input directions carry only noise. Task t's samples are moved
    by the drift model applied t-1 times (rotation in a seeded 2-plane or
    offset along a seeded direction).

    Args:
        spec: StreamSpec

    Returns:
        TaskStream
    """
    if not isinstance(spec, StreamSpec):
        raise ConfigError("generate_synthetic_stream expects a StreamSpec")
    rng = seeded_rng(spec.seed, 4)
    dim = spec.input_dim
    plane = _rotation_plane(rng, dim) if dim >= 2 else None
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    # own generator, so full-dimensional streams keep their draw order
    class_basis = None
    if spec.class_subspace_dim is not None:
        basis_rng = seeded_rng(spec.seed, 6)
        class_basis, _ = np.linalg.qr(basis_rng.standard_normal((dim, spec.class_subspace_dim)))
    mean_dim = dim if class_basis is None else spec.class_subspace_dim

    groups = class_partition(np.arange(spec.total_classes), spec.base_classes, spec.inc_classes)
    per_class = spec.train_per_class + spec.val_per_class + spec.eval_per_class
    tasks = []
    for k, class_ids in enumerate(groups):
        xs, ys, train_idx, val_idx, eval_idx = [], [], [], [], []
        offset = 0
        for c in class_ids:
            g = rng.standard_normal(mean_dim)
            mean = spec.cluster_separation * g / np.linalg.norm(g)
            if class_basis is not None:
                mean = class_basis @ mean
            xs.append(mean + spec.noise_sigma * rng.standard_normal((per_class, dim)))
            ys.append(np.full(per_class, c, dtype=np.int64))
            train_idx.append(np.arange(offset, offset + spec.train_per_class))
            val_idx.append(np.arange(offset + spec.train_per_class,
                                     offset + spec.train_per_class + spec.val_per_class))
            eval_idx.append(np.arange(offset + spec.train_per_class + spec.val_per_class, offset + per_class))
            offset += per_class
        x = _apply_drift(np.concatenate(xs), spec, k, plane, direction)
        tasks.append(TaskDataset(
            task_id=k + 1,
            class_ids=np.asarray(class_ids, dtype=np.int64),
            x=x,
            y=np.concatenate(ys),
            train_idx=np.concatenate(train_idx),
            eval_idx=np.concatenate(eval_idx),
            val_idx=np.concatenate(val_idx).astype(np.int64),
        ))
    return TaskStream(tasks, source={'kind': 'synthetic', **spec.to_dict()})
