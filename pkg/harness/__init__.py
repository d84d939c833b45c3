"""
Harness Module
Task streams, embedding files, the ACMap loop, baselines and run reports
"""

from .task_stream import (
    DRIFT_MODELS, SPLITS, StreamSpec, TaskDataset, TaskStream,
    class_partition, first_task_classes, generate_synthetic_stream,
)
from .embedding_io import (
    EMBEDDING_MAGIC, SplitSpec, embeddings_from_bytes, embeddings_to_bytes,
    load_embedding_stream, read_embedding_file, validate_embedding_file, write_embedding_file,
)
from .metrics import compute_metrics
from .evaluation import ForwardCounter, PhaseTimer, top1_accuracy
from .run_report import TIMING_FIELDS, RunReport
from .acmap_runner import RunArtifacts, run_acmap
from .baselines import run_ensemble_baseline, run_simplecil

__all__ = [
    'DRIFT_MODELS', 'SPLITS', 'StreamSpec', 'TaskDataset', 'TaskStream',
    'class_partition', 'first_task_classes', 'generate_synthetic_stream',
    'EMBEDDING_MAGIC', 'SplitSpec', 'embeddings_from_bytes', 'embeddings_to_bytes',
    'load_embedding_stream', 'read_embedding_file', 'validate_embedding_file', 'write_embedding_file',
    'compute_metrics',
    'ForwardCounter', 'PhaseTimer', 'top1_accuracy',
    'TIMING_FIELDS', 'RunReport',
    'RunArtifacts', 'run_acmap',
    'run_ensemble_baseline', 'run_simplecil',
]
