"""
Baselines Module
Comparison methods: prototypes on the raw backbone, and a per-task adapter
ensemble whose inference cost grows with the number of tasks
"""

import numpy as np

from adapters import AdapterConfig, train_task_adapter
from backbone import build_backbone, forward_features
from classifier import build_classifier, classifier_from_matrices
from errors import DivergenceError
from prototypes import PrototypeMatrix, PrototypeStore, compute_prototypes
from .acmap_runner import check_stream, fresh_adapter
from .evaluation import ForwardCounter, PhaseTimer, top1_accuracy
from .run_report import RunReport

BACKBONE_TAG = 'backbone'
ZERO_FILL_NOTE = ("ensemble prototypes of a task in subspaces trained after it are zero-filled; "
                  "the baseline measures inference cost, not complemented prototype accuracy")


def run_simplecil(stream, backbone_cfg, prototype_split='train', verbose=False, seed=None):
    """
    Prototype classifier on the frozen backbone with no adapter and no training

    Args:
        seed: run seed recorded in the report; defaults to the stream's seed

    Returns:
        RunReport
    """
    check_stream(stream, backbone_cfg)
    backbone = build_backbone(backbone_cfg)
    store = PrototypeStore()
    counter = ForwardCounter()
    timer = PhaseTimer(('prototype', 'eval'))
    report = RunReport(method='simplecil', seed=stream.source.get('seed') if seed is None else seed)

    for t in range(1, stream.n_tasks + 1):
        stream.begin_phase(t)
        timer.open_task()
        with timer.phase('prototype'):
            split = stream.prototype_split(t, prototype_split)
            store.put_raw(compute_prototypes(backbone, None, split, stream.tasks[t - 1].class_ids, t, BACKBONE_TAG))
            classifier = build_classifier(store, BACKBONE_TAG)

        with timer.phase('eval'):
            x, y = stream.cumulative_eval(t)
            features = forward_features(backbone, None, x)
            counter.record(t, passes=len(y), queries=len(y))
            accuracy = top1_accuracy(classifier, features, y)

        report.per_task_accuracy.append(accuracy)
        report.eval_seconds_per_query.append(timer.seconds['eval'][-1] / max(len(y), 1))
        if verbose:
            print(f"  [INFO] simplecil task {t}/{stream.n_tasks}: accuracy {accuracy:.4f}")

    report.forward_passes_per_query = counter.series()
    report.wall_time = timer.seconds
    report.cross_task_reads = stream.cross_task_reads
    return report.finalize()


def _ensemble_features(backbone, adapters, x):
    return np.hstack([forward_features(backbone, a, x) for a in adapters])


def _ensemble_classifier(blocks, n_adapters, dim, tag):
    """Concatenated prototypes, zero in subspaces trained after the task"""
    matrices = []
    for task_id, (class_ids, rows) in sorted(blocks.items()):
        padded = np.zeros((len(class_ids), n_adapters * dim))
        for j, block in enumerate(rows):
            padded[:, j * dim:(j + 1) * dim] = block
        matrices.append(PrototypeMatrix(task_id=task_id, adapter_tag=tag, rows=padded, class_ids=class_ids))
    return classifier_from_matrices(matrices)


def run_ensemble_baseline(stream, backbone_cfg, train_cfg, adapter_cfg=None, prototype_split='train',
                          verbose=False):
    """
    Keep one adapter per task and classify on their concatenated features

    Every adapter trains from the same random initialization. A query at
    task t costs t backbone passes.

    Returns:
        RunReport
    """
    adapter_cfg = adapter_cfg or AdapterConfig()
    check_stream(stream, backbone_cfg)
    backbone = build_backbone(backbone_cfg)
    init = fresh_adapter(backbone_cfg, adapter_cfg, train_cfg)
    adapters = []
    # task_id -> (class_ids, [P_i(theta_1), ..., P_i(theta_i)])
    blocks = {}
    counter = ForwardCounter()
    timer = PhaseTimer(('train', 'prototype', 'eval'))
    report = RunReport(method='ensemble', seed=train_cfg.seed, notes=[ZERO_FILL_NOTE])

    try:
        for t in range(1, stream.n_tasks + 1):
            stream.begin_phase(t)
            timer.open_task()
            task = stream.task_for_training(t)
            with timer.phase('train'):
                adapters.append(train_task_adapter(backbone, init, task, train_cfg))

            with timer.phase('prototype'):
                split = stream.prototype_split(t, prototype_split)
                rows = [compute_prototypes(backbone, a, split, task.class_ids, t, f"E{j}").rows
                        for j, a in enumerate(adapters, start=1)]
                blocks[t] = (np.sort(task.class_ids), rows)
                classifier = _ensemble_classifier(blocks, len(adapters), backbone.embed_dim, f"E1..E{t}")
            report.task_snapshots.append(t)

            with timer.phase('eval'):
                x, y = stream.cumulative_eval(t)
                features = _ensemble_features(backbone, adapters, x)
                counter.record(t, passes=len(adapters) * len(y), queries=len(y))
                accuracy = top1_accuracy(classifier, features, y)

            report.per_task_accuracy.append(accuracy)
            report.eval_seconds_per_query.append(timer.seconds['eval'][-1] / max(len(y), 1))
            if verbose:
                print(f"  [INFO] ensemble task {t}/{stream.n_tasks}: accuracy {accuracy:.4f} "
                      f"({len(adapters)} passes per query)")
    except DivergenceError as e:
        report.status = 'diverged'
        report.error = str(e)
        print(f"  [FAIL] ensemble diverged: {e}")

    report.forward_passes_per_query = counter.series()
    report.wall_time = timer.seconds
    report.cross_task_reads = stream.cross_task_reads
    return report.finalize()
