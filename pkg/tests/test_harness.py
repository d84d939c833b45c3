"""Tests for the task stream, embedding files, metrics and the run loops"""
import math
import os
import tempfile

import numpy as np

from helpers import (
    assert_raises, tiny_adapter_cfg, tiny_backbone_cfg, tiny_spec, tiny_stream, tiny_train_cfg,
)
from errors import ConfigError, DataError, FormatError
from harness import (
    ForwardCounter, RunArtifacts, RunReport, SplitSpec, StreamSpec, class_partition, compute_metrics,
    embeddings_from_bytes, embeddings_to_bytes, generate_synthetic_stream, load_embedding_stream, read_embedding_file,
    run_acmap, run_ensemble_baseline, run_simplecil, validate_embedding_file, write_embedding_file,
)


def _acmap(stream, **kwargs):
    return run_acmap(stream, tiny_backbone_cfg(), tiny_train_cfg(), adapter_cfg=tiny_adapter_cfg(), **kwargs)


def test_metrics_average_and_final():
    avg, final = compute_metrics([0.8, 0.6])
    assert avg == 0.7 and final == 0.6
    values = list(np.random.default_rng(0).uniform(0.0, 1.0, 20))
    avg, final = compute_metrics(values)
    assert abs(avg - math.fsum(values) / 20) <= 1e-15
    assert final == values[-1]


def test_metrics_reject_bad_input():
    assert_raises(DataError, compute_metrics, [])
    assert_raises(DataError, compute_metrics, [0.5, 1.5])
    assert_raises(DataError, compute_metrics, [-0.1])


def test_class_partition():
    groups = class_partition(np.arange(10), 4, 2)
    assert [g.tolist() for g in groups] == [[0, 1, 2, 3], [4, 5], [6, 7], [8, 9]]
    assert len(class_partition(np.arange(10), 0, 5)) == 2
    assert_raises(ConfigError, class_partition, np.arange(9), 4, 2)
    assert_raises(ConfigError, class_partition, np.arange(4), 0, 0)


def test_stream_spec_consistency():
    assert tiny_spec(base_classes=4, inc_classes=2, n_tasks=3).total_classes == 8
    assert_raises(ConfigError, tiny_spec, n_classes=10)
    assert_raises(ConfigError, tiny_spec, drift_model='shear')
    assert_raises(ConfigError, tiny_spec, n_tasks=0)


def test_synthetic_stream_layout_and_determinism():
    stream = tiny_stream(val_per_class=4)
    again = tiny_stream(val_per_class=4)
    assert stream.checksum() == again.checksum()
    assert stream.checksum() != tiny_stream(val_per_class=4, seed=8).checksum()
    assert stream.n_tasks == 3
    task = stream.tasks[1]
    assert task.class_ids.tolist() == [3, 4, 5]
    assert len(task.train_idx) == 3 * 24 and len(task.eval_idx) == 3 * 12 and len(task.val_idx) == 3 * 4
    assert not set(task.train_idx.tolist()) & set(task.eval_idx.tolist())


def test_drift_free_clusters_are_separable():
    stream = generate_synthetic_stream(StreamSpec(n_tasks=2, inc_classes=4, train_per_class=50, eval_per_class=50,
                                                  input_dim=16, cluster_separation=10.0, noise_sigma=0.5,
                                                  drift_model='none', seed=3))
    x = np.concatenate([t.train_x for t in stream.tasks])
    y = np.concatenate([t.train_y for t in stream.tasks])
    classes = np.unique(y)
    means = np.vstack([x[y == c].mean(axis=0) for c in classes])
    ex = np.concatenate([t.eval_x for t in stream.tasks])
    ey = np.concatenate([t.eval_y for t in stream.tasks])
    nearest = classes[np.argmin(((ex[:, None, :] - means[None]) ** 2).sum(axis=2), axis=1)]
    assert np.mean(nearest == ey) >= 0.99


def test_class_means_share_one_subspace_across_tasks():
    stream = tiny_stream(class_subspace_dim=3, noise_sigma=0.0, drift_model='none')
    means = np.vstack([t.x[t.y == c].mean(axis=0) for t in stream.tasks for c in t.class_ids])
    assert means.shape == (9, 8)
    s = np.linalg.svd(means, compute_uv=False)
    assert s[2] > 1e-3 * s[0]
    assert s[3] <= 1e-9 * s[0]
    assert np.allclose(np.linalg.norm(means, axis=1), 5.0)
    assert tiny_stream(class_subspace_dim=3).checksum() == tiny_stream(class_subspace_dim=3).checksum()
    assert tiny_stream(class_subspace_dim=3).checksum() != tiny_stream().checksum()


def test_class_subspace_dim_bounds():
    assert_raises(ConfigError, tiny_spec, class_subspace_dim=0)
    assert_raises(ConfigError, tiny_spec, class_subspace_dim=9)
    assert tiny_spec(class_subspace_dim=8).class_subspace_dim == 8


def test_stream_refuses_cross_task_reads():
    stream = tiny_stream()
    stream.begin_phase(2)
    stream.task_for_training(2)
    assert stream.cross_task_reads == 0
    assert_raises(DataError, stream.task_for_training, 1)
    assert_raises(DataError, stream.prototype_split, 3)
    assert stream.cross_task_reads == 2
    assert_raises(DataError, stream.eval_split, 3)
    x, y = stream.cumulative_eval(2)
    assert len(y) == 2 * 3 * 12
    assert_raises(DataError, stream.retained_split, 1)


def test_diagnostics_clone_counts_and_allows():
    stream = tiny_stream()
    stream.begin_phase(3)
    clone = stream.in_diagnostics_mode()
    x, y = clone.retained_split(1, 'train')
    assert len(y) == 3 * 24
    assert clone.cross_task_reads == 1 and stream.cross_task_reads == 0


def test_embedding_file_roundtrip():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((12, 4))
    y = np.repeat([3, 1, 2], 4)
    expected = x.astype(np.float32).astype(np.float64)
    with tempfile.TemporaryDirectory() as tmp:
        for name in ('emb.bin', 'emb.csv'):
            path = os.path.join(tmp, name)
            write_embedding_file(path, x, y)
            rx, ry = read_embedding_file(path)
            assert np.array_equal(rx, expected), name
            assert np.array_equal(ry, y), name
        summary = validate_embedding_file(os.path.join(tmp, 'emb.bin'))
    assert summary['samples'] == 12 and summary['dim'] == 4 and summary['classes'] == 3
    assert len(embeddings_to_bytes(x, y)) == 16 + 12 * (4 + 4 * 4)


def test_embedding_format_errors():
    x = np.ones((3, 2))
    y = np.array([0, 0, 1])
    payload = embeddings_to_bytes(x, y)
    error = assert_raises(FormatError, embeddings_from_bytes, b"BADMAGIC" + payload[8:])
    assert error.offset == 0
    assert_raises(FormatError, embeddings_from_bytes, payload[:-3])
    assert_raises(FormatError, embeddings_from_bytes, payload + b"\0")
    assert_raises(FormatError, embeddings_from_bytes, payload[:5])
    assert_raises(DataError, embeddings_to_bytes, x, np.array([0, -1, 1]))


def test_embedding_stream_split():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((40, 3))
    y = np.repeat(np.arange(4), 10)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'emb.bin')
        write_embedding_file(path, x, y)
        stream = load_embedding_stream(path, SplitSpec(base_classes=2, inc_classes=2, eval_fraction=0.2, seed=1))
        assert stream.n_tasks == 2
        task = stream.tasks[0]
        assert task.class_ids.tolist() == [0, 1]
        assert len(task.eval_idx) == 4 and len(task.train_idx) == 16

        write_embedding_file(path, x[:11], y[:11])
        assert_raises(DataError, load_embedding_stream, path, SplitSpec(base_classes=1, inc_classes=1))


def test_single_task_average_equals_final():
    report = _acmap(tiny_stream(n_tasks=1))
    assert report.status == 'complete'
    assert report.avg_accuracy == report.final_accuracy == report.per_task_accuracy[0]
    assert report.forward_passes_per_query == [1]
    assert report.task_snapshots == [1]


def test_acmap_run_is_exemplar_free_and_single_pass():
    stream = tiny_stream(n_tasks=4)
    artifacts = RunArtifacts()
    report = _acmap(stream, artifacts=artifacts)
    assert report.cross_task_reads == 0
    assert report.forward_passes_per_query == [1, 1, 1, 1]
    assert report.task_snapshots == [1, 2, 3, 4] and report.merge_count == 4
    assert len(artifacts.snapshots) == 4
    assert artifacts.store.task_ids == [1, 2, 3, 4]
    assert all(artifacts.store.mapped[t].adapter_tag == 'A4' for t in (1, 2, 3))
    assert all(0.0 <= a <= 1.0 for a in report.per_task_accuracy)
    assert set(report.wall_time) == {'train', 'prototype', 'mapping', 'eval'}
    assert all(len(v) == 4 for v in report.wall_time.values())


def test_early_stop_reuses_the_frozen_subspace():
    artifacts = RunArtifacts()
    report = _acmap(tiny_stream(n_tasks=4), early_stop=2, artifacts=artifacts)
    assert report.task_snapshots == [1, 2, 2, 2]
    assert report.merge_count == 4
    assert len(artifacts.snapshots) == 2
    assert report.forward_passes_per_query == [1, 1, 1, 1]


def test_runs_are_deterministic():
    first = _acmap(tiny_stream())
    second = _acmap(tiny_stream())
    assert first.deterministic_view() == second.deterministic_view()
    assert 'wall_time' not in first.deterministic_view()


def test_ablations_run_to_completion():
    for ir_enabled, cm_enabled in ((False, True), (True, False), (False, False)):
        report = _acmap(tiny_stream(), ir_enabled=ir_enabled, cm_enabled=cm_enabled)
        assert report.status == 'complete' and len(report.per_task_accuracy) == 3


def test_simplecil_costs_one_pass_and_is_deterministic():
    first = run_simplecil(tiny_stream(), tiny_backbone_cfg())
    second = run_simplecil(tiny_stream(), tiny_backbone_cfg())
    assert first.forward_passes_per_query == [1, 1, 1]
    assert first.deterministic_view() == second.deterministic_view()
    assert first.merge_count == 0 and first.cross_task_reads == 0


def test_simplecil_reports_the_stream_seed():
    assert run_simplecil(tiny_stream(seed=21), tiny_backbone_cfg(seed=4)).seed == 21
    assert run_simplecil(tiny_stream(seed=21), tiny_backbone_cfg(), seed=5).seed == 5


def test_drift_free_separable_stream_is_solved():
    def stream():
        return tiny_stream(n_tasks=5, drift_model='none', cluster_separation=10.0, noise_sigma=0.5)
    assert _acmap(stream()).final_accuracy >= 0.95
    assert run_simplecil(stream(), tiny_backbone_cfg()).final_accuracy >= 0.95


def test_trained_adapters_beat_the_raw_backbone():
    def stream():
        return tiny_stream(n_tasks=2, inc_classes=4, train_per_class=40, eval_per_class=30, input_dim=16,
                           class_subspace_dim=4, cluster_separation=4.0, drift_model='none')
    backbone_cfg = tiny_backbone_cfg(input_dim=16, embed_dim=16, hidden_dim=32)
    acmap = run_acmap(stream(), backbone_cfg, tiny_train_cfg(learning_rate=0.1, epochs=15),
                      adapter_cfg=tiny_adapter_cfg(rank=4, scale=1.0))
    raw = run_simplecil(stream(), backbone_cfg)
    assert acmap.final_accuracy - raw.final_accuracy > 0.01, (acmap.per_task_accuracy, raw.per_task_accuracy)


def test_ensemble_cost_grows_with_tasks():
    ensemble = run_ensemble_baseline(tiny_stream(n_tasks=4), tiny_backbone_cfg(), tiny_train_cfg(),
                                     tiny_adapter_cfg())
    acmap = _acmap(tiny_stream(n_tasks=4))
    ratios = [e / a for e, a in zip(ensemble.forward_passes_per_query, acmap.forward_passes_per_query)]
    assert ratios == [1, 2, 3, 4]
    assert ensemble.cross_task_reads == 0
    assert any('zero-filled' in note for note in ensemble.notes)


def test_ensemble_matches_acmap_on_the_first_task():
    ensemble = run_ensemble_baseline(tiny_stream(n_tasks=1), tiny_backbone_cfg(), tiny_train_cfg(),
                                     tiny_adapter_cfg())
    acmap = _acmap(tiny_stream(n_tasks=1))
    assert ensemble.per_task_accuracy == acmap.per_task_accuracy


def test_divergence_ends_the_run_with_a_partial_curve():
    stream = tiny_stream()
    task = stream.tasks[1]
    task.x[task.train_idx[0]] = np.nan
    report = _acmap(stream)
    assert report.status == 'diverged'
    assert 'non-finite loss' in report.error
    assert len(report.per_task_accuracy) == 1
    assert report.final_accuracy == report.per_task_accuracy[0]


def test_report_dict_roundtrip_and_curve():
    report = _acmap(tiny_stream(n_tasks=2))
    assert RunReport.from_dict(report.to_dict()) == report
    rows = report.curve_rows()
    assert rows[0] == ['task', 'accuracy'] and len(rows) == 3


def test_forward_counter():
    counter = ForwardCounter()
    counter.record(1, passes=10, queries=10)
    counter.record(2, passes=40, queries=20)
    counter.record(3, passes=5, queries=2)
    assert counter.series() == [1, 2, 2.5]
    assert counter.per_query(9) == 0


def test_stream_and_backbone_dims_must_agree():
    assert_raises(ConfigError, run_simplecil, tiny_stream(input_dim=6), tiny_backbone_cfg())
