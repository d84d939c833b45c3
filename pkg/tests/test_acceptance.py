"""Reference-stream experiments; run with ACMAP_SLOW_TESTS=1

These take minutes and check the directions the method is built on:
both components help, early stopping costs little, inference cost stays
flat, and one-shot centroid mapping tracks prototypes at least as well as
summed per-step shifts.
"""
import numpy as np

from helpers import require_slow
from config import load_config, resolve_experiment_config
from diagnostics import cosine_alignment_curve
from harness import RunArtifacts
from workflow import execute_method

SEEDS = (1993, 1994, 1995, 1996, 1997)


def _reference(**overrides):
    return resolve_experiment_config(load_config(), overrides={k.replace('__', '.'): str(v)
                                                               for k, v in overrides.items()})


# task 1 absorbs warm-up; medians over three tasks smooth scheduler noise
def _early(seconds):
    return float(np.median(seconds[1:4]))


def _late(seconds):
    return float(np.median(seconds[-3:]))


def _final_accuracies(cfg, method):
    return [execute_method(cfg.for_run(method=method), seed).final_accuracy for seed in SEEDS]


def test_both_components_improve_final_accuracy():
    require_slow()
    cfg = _reference()
    full = np.mean(_final_accuracies(cfg, 'acmap'))
    assert full > np.mean(_final_accuracies(cfg, 'acmap_no_cm'))
    assert full > np.mean(_final_accuracies(cfg, 'acmap_no_ir'))


def test_early_stopping_matches_full_merging():
    require_slow()
    cfg = _reference(stream__n_tasks=20)
    gaps = []
    for seed in SEEDS:
        artifacts = RunArtifacts()
        stopped = execute_method(cfg.for_run(early_stop=10), seed, artifacts)
        full = execute_method(cfg, seed)
        gaps.append(stopped.avg_accuracy - full.avg_accuracy)
        assert stopped.task_snapshots[10:] == [10] * 10
        assert len(artifacts.snapshots) == 10
    assert abs(np.mean(gaps)) <= 0.01


def test_inference_cost_ratio_reaches_forty():
    require_slow()
    cfg = _reference(stream__n_tasks=40, stream__inc_classes=2, stream__train_per_class=20,
                     stream__eval_per_class=10, train__epochs=2)
    acmap = execute_method(cfg, SEEDS[0])
    ensemble = execute_method(cfg.for_run(method='ensemble'), SEEDS[0])
    ratios = [e / a for e, a in zip(ensemble.forward_passes_per_query, acmap.forward_passes_per_query)]
    assert ratios == list(range(1, 41))
    assert acmap.forward_passes_per_query == [1] * 40


def test_query_time_stays_flat_while_the_ensemble_grows():
    require_slow()
    cfg = _reference(stream__n_tasks=20, train__epochs=2)
    acmap = execute_method(cfg, SEEDS[0]).eval_seconds_per_query
    ensemble = execute_method(cfg.for_run(method='ensemble'), SEEDS[0]).eval_seconds_per_query
    acmap_growth = _late(acmap) / _early(acmap)
    ensemble_growth = _late(ensemble) / _early(ensemble)
    assert acmap_growth <= 2.0, acmap
    assert ensemble_growth > 2.0, ensemble
    assert ensemble_growth > acmap_growth


def test_centroid_mapping_tracks_prototypes_at_least_as_well_as_summed_shifts():
    require_slow()
    cfg = _reference(stream__drift_amount=0.25)
    mapped, summed = [], []
    for seed in SEEDS:
        artifacts = RunArtifacts()
        execute_method(cfg, seed, artifacts)
        mapped.append(cosine_alignment_curve(artifacts, 1, 'mapped').mean_curve.mean())
        summed.append(cosine_alignment_curve(artifacts, 1, 'sdc').mean_curve.mean())
    assert np.mean(mapped) >= np.mean(summed)
