"""Running-average adapter merging, early stopping and weight-space interpolation.

The merge trail keeps every merged snapshot because centroid mapping needs
the subspaces of earlier tasks. Snapshots are new objects on every merge and
are never modified afterwards.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from adapters import combine
from backbone import forward_features
from classifier import classifier_from_matrices, predict_batch
from errors import ConfigError, DataError, ShapeError
from prototypes import compute_prototypes, snapshot_tag


def should_merge(t, early_stop=math.inf):
    """True while task ``t`` is within the early-stopping threshold (inclusive)"""
    if t < 1:
        raise ConfigError(f"task index must be >= 1, got {t}")
    return t <= early_stop


@dataclass
class MergeTrail:
    init_weights: object
    early_stop: float = math.inf
    ir_enabled: bool = True
    snapshots: list = field(default_factory=list)
    merge_count: int = 0

    def __post_init__(self):
        if self.early_stop != math.inf and (int(self.early_stop) != self.early_stop or self.early_stop < 1):
            raise ConfigError(f"early-stop threshold must be an integer >= 1 or infinity, got {self.early_stop!r}")

    @property
    def current(self):
        return self.snapshots[-1] if self.snapshots else None

    @property
    def current_index(self):
        return len(self.snapshots)

    @property
    def current_tag(self):
        return snapshot_tag(len(self.snapshots))

    @property
    def frozen(self):
        return self.merge_count >= self.early_stop


def merge_step(trail, theta):
    """
    Fold task adapter ``theta`` into the running average

    t = 1 stores theta as the first snapshot (and as the shared init when
    initial weight replacement is on); 2 <= t <= L appends
    mean_{t-1} + (theta - mean_{t-1}) / t; t > L only advances the counter.

    Args:
        trail: MergeTrail (updated in place)
        theta: trained AdapterWeights, or None once merging has stopped

    Returns:
        the same MergeTrail
    """
    t = trail.merge_count + 1
    if not should_merge(t, trail.early_stop):
        trail.merge_count = t
        return trail
    if theta is None:
        raise ShapeError(f"task {t} is within the merge window but no adapter was given")
    if not theta.same_shape(trail.init_weights):
        raise ShapeError("adapter shape differs from the trail's initial weights")

    if t == 1:
        trail.snapshots.append(theta.copy())
        if trail.ir_enabled:
            trail.init_weights = theta.copy()
    else:
        previous = trail.snapshots[-1]
        step = 1.0 / t
        down = [p + (n - p) * step for p, n in zip(previous.down, theta.down)]
        up = [p + (n - p) * step for p, n in zip(previous.up, theta.up)]
        trail.snapshots.append(type(previous)(down=down, up=up, scale=previous.scale))
    trail.merge_count = t
    return trail


@dataclass(frozen=True)
class InterpolationPoint:
    u: float
    v: float

    def __post_init__(self):
        if not (0.0 <= self.u <= 1.0 and 0.0 <= self.v <= 1.0 and self.u + self.v <= 1.0 + 1e-12):
            raise ConfigError(f"({self.u}, {self.v}) is outside the simplex")


def interpolate3(theta_a, theta_b, theta_c, point):
    """u * a + v * b + (1 - u - v) * c entrywise; vertices are returned exactly"""
    for other in (theta_b, theta_c):
        if not theta_a.same_shape(other):
            raise ShapeError("interpolated adapters must share shapes")
    if point.u == 1.0:
        return theta_a.copy()
    if point.v == 1.0:
        return theta_b.copy()
    if point.u == 0.0 and point.v == 0.0:
        return theta_c.copy()
    w = max(0.0, 1.0 - point.u - point.v)
    return combine([theta_a, theta_b, theta_c], [point.u, point.v, w])


def lattice_points(grid_size):
    """(i, j, u, v) for every simplex lattice point of a G x G grid"""
    if grid_size < 2:
        raise ConfigError(f"grid size must be >= 2, got {grid_size}")
    span = grid_size - 1
    return [(i, j, i / span, j / span) for i in range(grid_size) for j in range(grid_size - i)]


def count_lattice_points(grid_size):
    return sum(grid_size - k for k in range(grid_size))


def adapter_error(backbone, adapter, testset, prototype_split='train', tag='interp'):
    """
    Top-1 error of a cosine-prototype classifier in one adapter's subspace

    Prototypes come from each task's ``prototype_split``; errors are measured
    on the union of the tasks' eval splits.
    """
    if not testset:
        raise DataError("landscape scan needs at least one task")
    matrices = [
        compute_prototypes(backbone, adapter, task.split(prototype_split), task.class_ids, task.task_id, tag)
        for task in testset
    ]
    classifier = classifier_from_matrices(matrices)
    x = np.concatenate([task.eval_x for task in testset])
    y = np.concatenate([task.eval_y for task in testset])
    if len(y) == 0:
        raise DataError("landscape scan test set is empty")
    predictions = predict_batch(classifier, forward_features(backbone, adapter, x))
    return float(np.mean(predictions != y))


@dataclass
class LandscapeGrid:
    grid_size: int
    errors: np.ndarray
    points: list

    def valid_rows(self):
        return [(u, v, float(self.errors[i, j])) for i, j, u, v in self.points]

    def vertex_errors(self):
        last = self.grid_size - 1
        return {'a': float(self.errors[last, 0]), 'b': float(self.errors[0, last]), 'c': float(self.errors[0, 0])}


def landscape_scan(backbone, theta_a, theta_b, theta_c, testset, grid_size=11, prototype_split='train'):
    """
    Classification error over the barycentric simplex spanned by three adapters

    Args:
        backbone: frozen Backbone
        theta_a, theta_b, theta_c: adapters at u = 1, v = 1 and u = v = 0
        testset: list of TaskDataset whose union is the test data
        grid_size: lattice resolution G (>= 2)
        prototype_split: split each task's prototypes are built from

    Returns:
        LandscapeGrid with NaN outside the simplex
    """
    if not testset:
        raise DataError("landscape scan needs a nonempty test set")
    points = lattice_points(grid_size)
    errors = np.full((grid_size, grid_size), np.nan)
    for i, j, u, v in points:
        adapter = interpolate3(theta_a, theta_b, theta_c, InterpolationPoint(u, v))
        errors[i, j] = adapter_error(backbone, adapter, testset, prototype_split)
    return LandscapeGrid(grid_size=grid_size, errors=errors, points=points)


def export_landscape_csv(grid, path):
    """CSV with header u,v,error and one row per lattice point"""
    from state import atomic_write_text
    lines = ["u,v,error"]
    for u, v, err in grid.valid_rows():
        lines.append(f"{u:.17g},{v:.17g},{err:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")
