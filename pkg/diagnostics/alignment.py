"""
Alignment Diagnostics Module
How well stale prototypes track the true prototypes as the merged adapter
moves, and how quickly consecutive merged subspaces converge.

These measurements read retained data of past tasks, which the training
loop never may; they run on a diagnostics-mode view of the run's stream.
"""

from dataclasses import dataclass, field

import numpy as np

from errors import ConfigError, IncompleteArtifactsError
from numerics import cosine_rows
from prototypes import centroid_map, centroid_shift, compute_prototypes, sdc_map, snapshot_tag

VARIANTS = ('mapped', 'unmapped', 'sdc')


@dataclass
class AlignmentSeries:
    """Per-class cosine curves between candidate and true prototypes of one task"""
    anchor_task: int
    variant: str
    class_ids: np.ndarray
    t_values: list = field(default_factory=list)
    # (n_classes, len(t_values))
    curves: np.ndarray = None

    @property
    def mean_curve(self):
        return self.curves.mean(axis=0)

    def rows(self):
        """CSV rows anchor_task,class_id,t,variant,cos; class_id -1 is the class mean"""
        out = [['anchor_task', 'class_id', 't', 'variant', 'cos']]
        labelled = list(zip(self.class_ids.tolist(), self.curves)) + [(-1, self.mean_curve)]
        for class_id, curve in labelled:
            for t, value in zip(self.t_values, curve):
                out.append([str(self.anchor_task), str(class_id), str(t), self.variant, format(float(value), '.17g')])
        return out


@dataclass
class ConvergenceSeries:
    """Mean cosine between a task's prototypes under consecutive merged snapshots"""
    t_values: list = field(default_factory=list)
    cos: list = field(default_factory=list)

    def rows(self):
        out = [['t', 'cos']]
        for t, value in zip(self.t_values, self.cos):
            out.append([str(t), format(float(value), '.17g')])
        return out


class _ArtifactView:
    """Snapshot lookup and retained-data prototypes over finished run artifacts"""

    def __init__(self, artifacts):
        if artifacts is None or artifacts.backbone is None or artifacts.stream is None:
            raise IncompleteArtifactsError("run artifacts carry no backbone or stream")
        if not artifacts.snapshots or not artifacts.task_snapshots:
            raise IncompleteArtifactsError("run artifacts carry no merged snapshots")
        self.artifacts = artifacts
        self.stream = artifacts.stream.in_diagnostics_mode()
        self.cache = {}

    @property
    def n_tasks(self):
        return len(self.artifacts.task_snapshots)

    def snapshot_index(self, t):
        index = self.artifacts.task_snapshots.get(t)
        if index is None or not 1 <= index <= len(self.artifacts.snapshots):
            raise IncompleteArtifactsError(f"no merged snapshot recorded for task {t}")
        return index

    def prototypes(self, task, index, split):
        """P_task under merged snapshot ``index`` from retained ``split`` data"""
        key = (task, index, split)
        if key not in self.cache:
            x, y = self.stream.retained_split(task, split)
            class_ids = self.stream.tasks[task - 1].class_ids
            self.cache[key] = compute_prototypes(
                self.artifacts.backbone, self.artifacts.snapshots[index - 1], (x, y), class_ids, task,
                snapshot_tag(index),
            )
        return self.cache[key]

    def shift(self, task, from_index, to_index):
        split = self.artifacts.prototype_split
        return centroid_shift(self.prototypes(task, to_index, split), self.prototypes(task, from_index, split))


def cosine_alignment_curve(artifacts, anchor_task, variant='mapped'):
    """
    Cosine similarity between a candidate and the true prototype of every
    class of ``anchor_task``, for t = anchor_task .. T

    The true prototype at t is computed in the task-t merged subspace from
    the anchor task's retained eval split. Candidates:

    - unmapped: the anchor task's prototypes in its own subspace
    - mapped: centroid mapping with one shift measured on task t's data
    - sdc: sum of the per-step shifts measured on tasks anchor+1 .. t

    Returns:
        AlignmentSeries
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown alignment variant '{variant}', expected one of {VARIANTS}")
    view = _ArtifactView(artifacts)
    if not 1 <= anchor_task <= view.n_tasks:
        raise IncompleteArtifactsError(f"anchor task {anchor_task} was not run (tasks 1..{view.n_tasks})")

    anchor_index = view.snapshot_index(anchor_task)
    raw = view.prototypes(anchor_task, anchor_index, 'eval')
    t_values = list(range(anchor_task, view.n_tasks + 1))
    columns = []
    chain = []
    for t in t_values:
        index = view.snapshot_index(t)
        truth = view.prototypes(anchor_task, index, 'eval')
        if t > anchor_task:
            previous = view.snapshot_index(t - 1)
            if previous != index:
                chain.append(view.shift(t, previous, index))

        if variant == 'unmapped' or index == anchor_index:
            candidate = raw
        elif variant == 'mapped':
            candidate = centroid_map(raw, view.shift(t, anchor_index, index))
        else:
            candidate = sdc_map(raw, chain)
        columns.append(cosine_rows(candidate.rows, truth.rows))

    return AlignmentSeries(
        anchor_task=anchor_task, variant=variant, class_ids=raw.class_ids,
        t_values=t_values, curves=np.column_stack(columns),
    )


def merge_convergence_curve(artifacts):
    """
    Per task t >= 2, mean over classes of cos(P_t(A_{t-1}), P_t(A_t))

    Values approaching 1 mean further merging barely moves the subspace;
    ``suggest_threshold`` turns the curve into an early-stop threshold.
    """
    view = _ArtifactView(artifacts)
    if view.n_tasks < 2:
        raise IncompleteArtifactsError("convergence needs at least two tasks")
    split = artifacts.prototype_split
    series = ConvergenceSeries()
    for t in range(2, view.n_tasks + 1):
        before = view.prototypes(t, view.snapshot_index(t - 1), split)
        after = view.prototypes(t, view.snapshot_index(t), split)
        series.t_values.append(t)
        series.cos.append(float(np.mean(cosine_rows(before.rows, after.rows))))
    return series


def suggest_threshold(curve, tolerance=0.01):
    """First task whose convergence cosine reaches 1 - tolerance, or None"""
    if not 0.0 <= tolerance <= 2.0:
        raise ConfigError(f"tolerance must lie in [0, 2], got {tolerance}")
    for t, value in zip(curve.t_values, curve.cos):
        if value >= 1.0 - tolerance:
            return t
    return None
