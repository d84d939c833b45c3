"""
Workflow Executor Module
Runs one method for one seed and writes that seed's output files
"""

import os

from adapters import train_task_adapter
from backbone import build_backbone
from config import ExperimentConfig
from errors import ConfigError
from harness import (
    RunArtifacts, generate_synthetic_stream, load_embedding_stream,
    run_acmap, run_ensemble_baseline, run_simplecil,
)
from harness.acmap_runner import fresh_adapter
from merging import export_landscape_csv, landscape_scan
from state import atomic_write_text, save_report, save_snapshots


def _acmap_variant(ir_enabled, cm_enabled):
    def handler(stream, cfg, seed, artifacts=None):
        return run_acmap(
            stream, cfg.backbone_config(stream.input_dim), cfg.train_config(seed),
            early_stop=cfg.early_stop, ir_enabled=ir_enabled, cm_enabled=cm_enabled,
            adapter_cfg=cfg.adapter_config(), prototype_split=cfg.prototype_split,
            method=cfg.method, artifacts=artifacts, verbose=cfg.verbose,
        )
    return handler


def _simplecil(stream, cfg, seed, artifacts=None):
    return run_simplecil(stream, cfg.backbone_config(stream.input_dim), cfg.prototype_split, cfg.verbose, seed=seed)


def _ensemble(stream, cfg, seed, artifacts=None):
    return run_ensemble_baseline(
        stream, cfg.backbone_config(stream.input_dim), cfg.train_config(seed),
        cfg.adapter_config(), cfg.prototype_split, cfg.verbose,
    )


# Method name -> handler(stream, cfg, seed, artifacts)
METHOD_HANDLERS = {
    'acmap': _acmap_variant(ir_enabled=True, cm_enabled=True),
    'acmap_no_ir': _acmap_variant(ir_enabled=False, cm_enabled=True),
    'acmap_no_cm': _acmap_variant(ir_enabled=True, cm_enabled=False),
    'acmap_no_ir_no_cm': _acmap_variant(ir_enabled=False, cm_enabled=False),
    'simplecil': _simplecil,
    'ensemble': _ensemble,
}


def build_stream(cfg, seed):
    """Task stream for one seed: the embedding file if configured, else synthetic data"""
    if cfg.embedding_file:
        return load_embedding_stream(cfg.embedding_file, cfg.split_spec(seed))
    return generate_synthetic_stream(cfg.stream_spec(seed))


def execute_method(cfg, seed, artifacts=None):
    """
    Run the configured method for one seed

    Args:
        cfg: ExperimentConfig
        seed: run seed (stream, split and training)
        artifacts: optional RunArtifacts to fill

    Returns:
        RunReport with the resolved single-seed config attached
    """
    stream = build_stream(cfg, seed)
    report = METHOD_HANDLERS[cfg.method](stream, cfg, seed, artifacts)
    report.seed = seed
    report.config = cfg.for_run(seeds=[seed]).to_dict()
    report.notes.append(f"stream checksum {stream.checksum()}")
    return report


def seed_paths(output_dir, seed):
    return {
        'report': os.path.join(output_dir, f"report_seed{seed}.json"),
        'curve': os.path.join(output_dir, f"curve_seed{seed}.csv"),
        'prototypes': os.path.join(output_dir, f"prototypes_seed{seed}.csv"),
        'snapshots': os.path.join(output_dir, f"snapshots_seed{seed}"),
        'landscape': os.path.join(output_dir, f"landscape_seed{seed}.csv"),
        'alignment': os.path.join(output_dir, f"alignment_seed{seed}.csv"),
        'convergence': os.path.join(output_dir, f"convergence_seed{seed}.csv"),
        'diagnostics': os.path.join(output_dir, f"diagnostics_seed{seed}.json"),
    }


def write_seed_outputs(report, artifacts, output_dir):
    """Report JSON, accuracy curve, prototype table and merged snapshots of one seed"""
    paths = seed_paths(output_dir, report.seed)
    save_report(report.to_dict(), paths['report'])
    atomic_write_text(paths['curve'], "\n".join(",".join(r) for r in report.curve_rows()) + "\n")
    if artifacts is not None and artifacts.store is not None and artifacts.store.task_ids:
        artifacts.store.export_csv(paths['prototypes'])
    if artifacts is not None and artifacts.snapshots:
        save_snapshots(artifacts.snapshots, artifacts.task_snapshots, paths['snapshots'],
                       extra={'method': report.method, 'seed': report.seed})
    return paths


def run_seed_job(cfg_dict, seed, output_dir):
    """
    One isolated seed run; the entry point for worker processes

    Returns:
        the report as a plain dict
    """
    cfg = ExperimentConfig.from_dict(cfg_dict)
    artifacts = RunArtifacts()
    report = execute_method(cfg, seed, artifacts)
    write_seed_outputs(report, artifacts, output_dir)
    return report.to_dict()


def train_landscape_adapters(cfg, seed, ir_enabled=True):
    """
    Train adapters on tasks first..first+2 for a landscape scan

    Tasks before ``first`` are trained too so the shared initialization is
    the one the merge loop would use at that point.

    Returns:
        (backbone, [theta_a, theta_b, theta_c], [TaskDataset x3])
    """
    first = cfg.landscape.get('first_task', 1)
    stream = build_stream(cfg, seed)
    if first < 1 or first + 2 > stream.n_tasks:
        raise ConfigError(f"landscape needs tasks {first}..{first + 2}, stream has {stream.n_tasks}")
    backbone_cfg = cfg.backbone_config(stream.input_dim)
    train_cfg = cfg.train_config(seed)
    backbone = build_backbone(backbone_cfg)
    init = fresh_adapter(backbone_cfg, cfg.adapter_config(), train_cfg)
    adapters, tasks = [], []
    for t in range(1, first + 3):
        stream.begin_phase(t)
        task = stream.task_for_training(t)
        theta = train_task_adapter(backbone, init, task, train_cfg)
        if t == 1 and ir_enabled:
            init = theta.copy()
        if t >= first:
            adapters.append(theta)
            tasks.append(task)
    return backbone, adapters, tasks


def execute_landscape(cfg, seed, output_dir):
    """Scan the simplex spanned by three consecutive task adapters and write the grid CSV"""
    ir_enabled = cfg.method not in ('acmap_no_ir', 'acmap_no_ir_no_cm')
    backbone, (theta_a, theta_b, theta_c), tasks = train_landscape_adapters(cfg, seed, ir_enabled)
    grid = landscape_scan(backbone, theta_a, theta_b, theta_c, tasks,
                          grid_size=cfg.landscape.get('grid_size', 11), prototype_split=cfg.prototype_split)
    path = seed_paths(output_dir, seed)['landscape']
    export_landscape_csv(grid, path)
    return grid, path
