"""
ACMap Runner Module
The class-incremental loop: train from the shared init, merge, build
prototypes in the merged subspace, map old prototypes, evaluate cumulatively
"""

import math
from dataclasses import dataclass, field

from adapters import AdapterConfig, init_adapter, train_task_adapter
from backbone import build_backbone, forward_features
from classifier import build_classifier
from errors import ConfigError, DivergenceError
from merging import MergeTrail, merge_step, should_merge
from prototypes import (
    PrototypeStore, centroid_map, centroid_shift, compute_prototypes, snapshot_index, snapshot_tag,
)
from .evaluation import ForwardCounter, PhaseTimer, top1_accuracy
from .run_report import RunReport

PHASES = ('train', 'prototype', 'mapping', 'eval')


@dataclass
class RunArtifacts:
    """In-memory state a finished run leaves behind for diagnostics"""
    backbone: object = None
    stream: object = None
    snapshots: list = field(default_factory=list)
    task_snapshots: dict = field(default_factory=dict)
    store: object = None
    prototype_split: str = 'train'
    early_stop: float = math.inf


def check_stream(stream, backbone_cfg):
    if stream.input_dim != backbone_cfg.input_dim:
        raise ConfigError(f"stream inputs have {stream.input_dim} features, backbone expects {backbone_cfg.input_dim}")


def fresh_adapter(backbone_cfg, adapter_cfg, train_cfg):
    """Shared random initialization used before any replacement"""
    return init_adapter(
        backbone_cfg.n_blocks, backbone_cfg.embed_dim, adapter_cfg.rank, adapter_cfg.scale,
        seed=train_cfg.seed, precision=backbone_cfg.precision,
    )


def _map_stale_prototypes(backbone, trail, store, current, task_id, split, source_prototypes):
    """Centroid prototype mapping of every stale task into the current subspace"""
    tag = current.adapter_tag
    for i in store.stale_tasks(tag):
        mapped = store.mapped.get(i)
        if mapped is not None and mapped.adapter_tag == tag:
            continue
        source_tag = store.raw[i].adapter_tag
        if source_tag not in source_prototypes:
            source_prototypes[source_tag] = compute_prototypes(
                backbone, trail.snapshots[snapshot_index(source_tag) - 1], split, current.class_ids, task_id, source_tag
            )
        shift = centroid_shift(current, source_prototypes[source_tag])
        store.put_mapped(centroid_map(store.raw[i], shift))


def run_acmap(stream, backbone_cfg, train_cfg, early_stop=math.inf, ir_enabled=True, cm_enabled=True,
              adapter_cfg=None, prototype_split='train', method='acmap', artifacts=None, verbose=False):
    """
    Run ACMap over every task of the stream

    Args:
        stream: TaskStream
        backbone_cfg: BackboneConfig
        train_cfg: TrainConfig
        early_stop: threshold L (tasks after L reuse the frozen merged adapter)
        ir_enabled: initial weight replacement
        cm_enabled: centroid prototype mapping
        adapter_cfg: AdapterConfig (rank, scale)
        prototype_split: 'train' or 'val'
        method: name recorded in the report
        artifacts: optional RunArtifacts filled for diagnostics
        verbose: print one progress line per task

    Returns:
        RunReport (status 'diverged' with the partial curve if training blew up)
    """
    adapter_cfg = adapter_cfg or AdapterConfig()
    check_stream(stream, backbone_cfg)
    backbone = build_backbone(backbone_cfg)
    trail = MergeTrail(init_weights=fresh_adapter(backbone_cfg, adapter_cfg, train_cfg),
                       early_stop=early_stop, ir_enabled=ir_enabled)
    store = PrototypeStore()
    counter = ForwardCounter()
    timer = PhaseTimer(PHASES)
    report = RunReport(method=method, seed=train_cfg.seed)

    try:
        for t in range(1, stream.n_tasks + 1):
            stream.begin_phase(t)
            timer.open_task()
            task = stream.task_for_training(t)

            with timer.phase('train'):
                if should_merge(t, early_stop):
                    theta = train_task_adapter(backbone, trail.init_weights, task, train_cfg)
                    merge_step(trail, theta)
                else:
                    merge_step(trail, None)

            merged = trail.current
            tag = snapshot_tag(trail.current_index)
            with timer.phase('prototype'):
                split = stream.prototype_split(t, prototype_split)
                current = compute_prototypes(backbone, merged, split, task.class_ids, t, tag)
                store.put_raw(current)
            report.task_snapshots.append(trail.current_index)

            with timer.phase('mapping'):
                if cm_enabled:
                    _map_stale_prototypes(backbone, trail, store, current, t, split, {})
                classifier = build_classifier(store, tag, allow_stale=not cm_enabled)

            with timer.phase('eval'):
                x, y = stream.cumulative_eval(t)
                features = forward_features(backbone, merged, x)
                counter.record(t, passes=len(y), queries=len(y))
                accuracy = top1_accuracy(classifier, features, y)

            report.per_task_accuracy.append(accuracy)
            report.eval_seconds_per_query.append(timer.seconds['eval'][-1] / max(len(y), 1))
            if verbose:
                print(f"  [INFO] {method} task {t}/{stream.n_tasks}: accuracy {accuracy:.4f} "
                      f"(subspace {tag}, merges {min(trail.merge_count, early_stop)})")
    except DivergenceError as e:
        report.status = 'diverged'
        report.error = str(e)
        print(f"  [FAIL] {method} diverged: {e}")

    report.forward_passes_per_query = counter.series()
    report.wall_time = timer.seconds
    report.merge_count = trail.merge_count
    report.cross_task_reads = stream.cross_task_reads
    if artifacts is not None:
        artifacts.backbone = backbone
        artifacts.stream = stream
        artifacts.snapshots = list(trail.snapshots)
        artifacts.task_snapshots = {t: k for t, k in enumerate(report.task_snapshots, start=1)}
        artifacts.store = store
        artifacts.prototype_split = prototype_split
        artifacts.early_stop = early_stop
    return report.finalize()
