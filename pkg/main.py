import argparse
import os
import sys

import numpy as np

from cli_utils import flatten_tokens, parse_overrides, parse_seed_args, parse_thresholds
from config import default_output_dir, load_config, load_experiment_file, resolve_experiment_config
from errors import AcmapError, ConfigError, UsageError
from harness import validate_embedding_file, write_embedding_file
from utils import print_banner
from workflow import ExperimentManager, build_stream

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_experiment_args(p):
    p.add_argument('--config', help='key=value experiment file')
    p.add_argument('--defaults', help='JSON defaults table (default: config/config.json)')
    p.add_argument('--method', help='acmap, acmap_no_ir, acmap_no_cm, acmap_no_ir_no_cm, simplecil, ensemble')
    p.add_argument('--seeds', nargs='+', help='seed list, space or comma separated')
    p.add_argument('--early-stop', help="early-stop threshold L (integer or 'inf')")
    p.add_argument('--output-dir', help='output directory (default: $ACMAP_OUTPUT_DIR or runs)')
    p.add_argument('--embedding-file', help='ACMEMB1 or CSV embeddings instead of the synthetic stream')
    p.add_argument('--preset', help='training preset (cifar, cub, imagenet_r, imagenet_a, vtab)')
    p.add_argument('--workers', type=int, help='parallel seed processes')
    p.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', help='override any config key')
    p.add_argument('--verbose', action='store_true', help='one progress line per task')


def build_parser():
    parser = _Parser(prog='acmap', description='Adapter merging with centroid prototype mapping')
    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('run', help='run one method over all seeds')
    _add_experiment_args(p)

    p = sub.add_parser('ablation', help='run several methods and thresholds over the same seeds')
    _add_experiment_args(p)
    p.add_argument('--methods', nargs='+', help='methods to compare')
    p.add_argument('--thresholds', nargs='+', help='extra early-stop thresholds for acmap')

    p = sub.add_parser('landscape', help='error over the simplex of three task adapters')
    _add_experiment_args(p)
    p.add_argument('--grid-size', type=int, help='lattice resolution G')
    p.add_argument('--first-task', type=int, help='first of the three consecutive tasks')

    p = sub.add_parser('diagnose', help='alignment and convergence curves from a saved run')
    _add_experiment_args(p)
    p.add_argument('--run-dir', required=True, help='directory written by run')
    p.add_argument('--anchor-task', type=int, help='task whose prototypes are tracked')
    p.add_argument('--tolerance', type=float, help='convergence tolerance for the threshold suggestion')

    p = sub.add_parser('gen-data', help='write a synthetic stream as an embedding file')
    _add_experiment_args(p)
    p.add_argument('--out', required=True, help='destination (.csv for CSV, otherwise ACMEMB1)')

    p = sub.add_parser('validate', help='check an embedding file')
    p.add_argument('path', help='embedding file')
    return parser


def _overrides(args):
    """Dotted-key overrides from explicit flags, then --set pairs"""
    values = {}
    flags = {
        'method': args.method,
        'early_stop': args.early_stop,
        'output_dir': args.output_dir,
        'embedding_file': args.embedding_file,
        'workers': args.workers,
        'ablation.methods': flatten_tokens(getattr(args, 'methods', None)) or None,
        'ablation.thresholds': parse_thresholds(getattr(args, 'thresholds', None)) or None,
        'landscape.grid_size': getattr(args, 'grid_size', None),
        'landscape.first_task': getattr(args, 'first_task', None),
        'diagnostics.anchor_task': getattr(args, 'anchor_task', None),
        'diagnostics.tolerance': getattr(args, 'tolerance', None),
    }
    if args.seeds:
        flags['seeds'] = parse_seed_args(args.seeds)
    if args.verbose:
        flags['verbose'] = True
    values.update({k: v for k, v in flags.items() if v is not None})
    values.update(parse_overrides(args.set))
    return values


def resolve_args(args):
    defaults = load_config(args.defaults) if args.defaults else load_config()
    file_values = load_experiment_file(args.config) if args.config else None
    cfg = resolve_experiment_config(defaults, file_values, _overrides(args), preset=args.preset)
    return cfg, cfg.output_dir or default_output_dir()


def _gen_data(cfg, out):
    if cfg.embedding_file:
        raise ConfigError("gen-data writes a synthetic stream; drop --embedding-file")
    stream = build_stream(cfg, cfg.seeds[0])
    x = np.concatenate([task.x for task in stream.tasks])
    y = np.concatenate([task.y for task in stream.tasks])
    write_embedding_file(out, x, y)
    print(f"[OK] wrote {len(y)} samples of dim {x.shape[1]} ({stream.n_tasks} tasks) to {out}")


def dispatch(argv):
    """
    Parse ``argv`` and run one subcommand

    Returns:
        exit code: 0 success, 1 runtime failure, 2 usage error, 3 config error
    """
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand (run, ablation, landscape, diagnose, gen-data, validate)")

        if args.command == 'validate':
            summary = validate_embedding_file(args.path)
            print(f"[OK] {summary['path']}: {summary['samples']} samples, dim {summary['dim']}, "
                  f"{summary['classes']} classes (min {summary['min_per_class']} per class)")
            return EXIT_OK

        cfg, output_dir = resolve_args(args)
        if args.command == 'gen-data':
            _gen_data(cfg, args.out)
            return EXIT_OK

        manager = ExperimentManager(cfg, output_dir)
        if args.command == 'run':
            manager.run()
        elif args.command == 'ablation':
            manager.run_ablation()
        elif args.command == 'landscape':
            manager.run_landscape()
        elif args.command == 'diagnose':
            if not (args.output_dir or cfg.output_dir):
                manager.output_dir = output_dir = args.run_dir
            manager.run_diagnose(args.run_dir, seeds=parse_seed_args(args.seeds))
        print_banner(f"[OK] {args.command} complete -> {os.path.abspath(output_dir)}")
        return EXIT_OK
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    except UsageError as e:
        return _fail(e.kind, e, EXIT_USAGE)
    except ConfigError as e:
        return _fail(e.kind, e, EXIT_CONFIG)
    except AcmapError as e:
        return _fail(e.kind, e, EXIT_RUNTIME)
    except OSError as e:
        return _fail('io', e, EXIT_RUNTIME)


def _fail(kind, error, code):
    message = " ".join(str(error).split())
    print(f"error kind={kind} message={message}", file=sys.stderr)
    return code


def main():
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())
