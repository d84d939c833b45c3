"""
Workflow Manager Module
Coordinates multi-seed runs, ablation tables, landscape scans and
diagnostics over saved runs
"""

import math
import os
import re
from concurrent.futures import ProcessPoolExecutor, as_completed
from datetime import datetime

from backbone import build_backbone
from config import ExperimentConfig
from diagnostics import cosine_alignment_curve, export_report, merge_convergence_curve, suggest_threshold
from errors import IncompleteArtifactsError
from harness import RunArtifacts
from state import atomic_write_text, load_report, load_snapshots, save_report
from utils import format_mean_std, mean_std, print_banner
from .workflow_executor import build_stream, execute_landscape, run_seed_job, seed_paths


def _threshold_label(value):
    return 'inf' if value == math.inf else str(int(value))


def saved_seeds(run_dir):
    """Seeds that have a report_seed<S>.json in ``run_dir``"""
    if not os.path.isdir(run_dir):
        return []
    seeds = []
    for name in os.listdir(run_dir):
        match = re.fullmatch(r"report_seed(-?\d+)\.json", name)
        if match:
            seeds.append(int(match.group(1)))
    return sorted(seeds)


def summarize(reports, cfg):
    """Mean and std of the summary metrics over per-seed report dicts"""
    complete = [r for r in reports if r.get('status') == 'complete']
    avg = [r['avg_accuracy'] for r in complete]
    final = [r['final_accuracy'] for r in complete]
    avg_mean, avg_std = mean_std(avg)
    final_mean, final_std = mean_std(final)
    return {
        'method': cfg.method,
        'early_stop': _threshold_label(cfg.early_stop),
        'seeds': [r['seed'] for r in reports],
        'statuses': {str(r['seed']): r.get('status') for r in reports},
        'avg_accuracy': {'mean': avg_mean, 'std': avg_std, 'values': avg},
        'final_accuracy': {'mean': final_mean, 'std': final_std, 'values': final},
        'avg_accuracy_text': format_mean_std(avg),
        'final_accuracy_text': format_mean_std(final),
        'timestamp': datetime.now().isoformat(),
    }


class ExperimentManager:
    """
    Runs an experiment configuration over its seeds
    """

    def __init__(self, config, output_dir):
        """
        Initialize experiment manager with configuration

        Args:
            config: ExperimentConfig
            output_dir: directory receiving every output file
        """
        self.config = config
        self.output_dir = output_dir

    def run_seeds(self, cfg=None, output_dir=None):
        """
        Execute one method over all seeds and write per-seed outputs

        Seeds run in isolated worker processes when ``workers`` > 1; reports
        come back in seed order either way.

        Returns:
            list of report dicts
        """
        cfg = cfg or self.config
        output_dir = output_dir or self.output_dir
        os.makedirs(output_dir, exist_ok=True)
        cfg_dict = cfg.to_dict()
        print(f"[INFO] {cfg.method} (L={_threshold_label(cfg.early_stop)}) over seeds {cfg.seeds}")

        results = {}
        if cfg.workers > 1 and len(cfg.seeds) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
                futures = {ex.submit(run_seed_job, cfg_dict, seed, output_dir): seed for seed in cfg.seeds}
                for f in as_completed(futures):
                    results[futures[f]] = f.result()
        else:
            for seed in cfg.seeds:
                results[seed] = run_seed_job(cfg_dict, seed, output_dir)

        reports = [results[seed] for seed in cfg.seeds]
        for r in reports:
            tag = '[OK]' if r['status'] == 'complete' else '[WARN]'
            print(f"  {tag} seed {r['seed']}: avg {r['avg_accuracy']}, final {r['final_accuracy']} ({r['status']})")
        return reports

    def run(self):
        """Run the configured method and write summary.json"""
        print_banner(f"Running {self.config.method} over {len(self.config.seeds)} seed(s)")
        reports = self.run_seeds()
        summary = summarize(reports, self.config)
        save_report(summary, os.path.join(self.output_dir, 'summary.json'))
        print_banner(f"[OK] {self.config.method}: avg {summary['avg_accuracy_text']}, "
                     f"final {summary['final_accuracy_text']}")
        return summary

    def run_ablation(self, methods=None, thresholds=None):
        """
        Several methods (and ACMap at several thresholds) over the same seeds

        Each variant writes into its own subdirectory; the combined table
        goes to ablation_summary.json and ablation_summary.csv.
        """
        methods = methods or self.config.ablation.get('methods') or ['acmap']
        thresholds = thresholds if thresholds is not None else self.config.ablation.get('thresholds', [])
        variants = [(m, self.config.early_stop) for m in methods]
        variants += [('acmap', L) for L in thresholds if ('acmap', L) not in variants]

        print_banner(f"Ablation: {len(variants)} variant(s) x {len(self.config.seeds)} seed(s)")
        rows = []
        for method, early_stop in variants:
            cfg = self.config.for_run(method=method, early_stop=early_stop)
            label = f"{method}_L{_threshold_label(early_stop)}"
            reports = self.run_seeds(cfg, os.path.join(self.output_dir, label))
            rows.append({'variant': label, **summarize(reports, cfg)})

        save_report({'variants': rows}, os.path.join(self.output_dir, 'ablation_summary.json'))
        lines = ['variant,method,early_stop,avg_mean,avg_std,final_mean,final_std']
        for row in rows:
            lines.append(",".join([
                row['variant'], row['method'], row['early_stop'],
                *[format(v, '.17g') if v is not None else '' for v in (
                    row['avg_accuracy']['mean'], row['avg_accuracy']['std'],
                    row['final_accuracy']['mean'], row['final_accuracy']['std'])],
            ]))
        atomic_write_text(os.path.join(self.output_dir, 'ablation_summary.csv'), "\n".join(lines) + "\n")
        for row in rows:
            print(f"  {row['variant']:<28} avg {row['avg_accuracy_text']:<16} final {row['final_accuracy_text']}")
        return rows

    def run_landscape(self):
        """One landscape grid per seed"""
        print_banner("Landscape scan")
        os.makedirs(self.output_dir, exist_ok=True)
        written = []
        for seed in self.config.seeds:
            grid, path = execute_landscape(self.config, seed, self.output_dir)
            print(f"  [OK] seed {seed}: {len(grid.points)} lattice points, vertices {grid.vertex_errors()} -> {path}")
            written.append(path)
        return written

    def load_artifacts(self, run_dir, seed):
        """Rebuild diagnostics artifacts of a saved run from its report and snapshots"""
        paths = seed_paths(run_dir, seed)
        report = load_report(paths['report'])
        if report is None:
            raise IncompleteArtifactsError(f"no report for seed {seed} in {run_dir}")
        if not os.path.isdir(paths['snapshots']):
            raise IncompleteArtifactsError(f"run in {run_dir} has no merged snapshots for seed {seed}")
        cfg = ExperimentConfig.from_dict(report['config'])
        snapshots, task_snapshots, _ = load_snapshots(paths['snapshots'], cfg.backbone.get('precision', 'float64'))
        stream = build_stream(cfg, seed)
        return RunArtifacts(
            backbone=build_backbone(cfg.backbone_config(stream.input_dim)),
            stream=stream,
            snapshots=snapshots,
            task_snapshots=task_snapshots,
            prototype_split=cfg.prototype_split,
            early_stop=cfg.early_stop,
        )

    def run_diagnose(self, run_dir, seeds=None):
        """Alignment and convergence curves for every seed of a saved run"""
        print_banner(f"Diagnostics for {run_dir}")
        seeds = seeds or saved_seeds(run_dir)
        if not seeds:
            raise IncompleteArtifactsError(f"no run reports in {run_dir}")
        os.makedirs(self.output_dir, exist_ok=True)
        diag = self.config.diagnostics
        results = []
        for seed in seeds:
            artifacts = self.load_artifacts(run_dir, seed)
            paths = seed_paths(self.output_dir, seed)
            series = [cosine_alignment_curve(artifacts, diag.get('anchor_task', 1), v)
                      for v in diag.get('variants', ['mapped', 'unmapped', 'sdc'])]
            rows = series[0].rows()[:1] + [row for s in series for row in s.rows()[1:]]
            atomic_write_text(paths['alignment'], "\n".join(",".join(r) for r in rows) + "\n")

            summary = {'seed': seed, 'anchor_task': diag.get('anchor_task', 1),
                       'mean_alignment': {s.variant: float(s.mean_curve.mean()) for s in series}}
            if len(artifacts.task_snapshots) >= 2:
                convergence = merge_convergence_curve(artifacts)
                export_report(convergence, paths['convergence'], format='csv')
                threshold = suggest_threshold(convergence, diag.get('tolerance', 0.01))
                summary['suggested_threshold'] = threshold
                print(f"  [INFO] seed {seed}: suggested early-stop threshold {threshold}")
            save_report(summary, paths['diagnostics'])
            print(f"  [OK] seed {seed}: mean alignment {summary['mean_alignment']}")
            results.append(summary)
        return results
