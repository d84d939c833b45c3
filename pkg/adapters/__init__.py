"""
Adapters Module
Handles the bottleneck adapter: weights, task training and gradient checks
"""

from .adapter_weights import (
    AdapterConfig,
    AdapterWeights,
    init_adapter,
    combine,
    save_adapter,
    load_adapter,
    adapter_to_bytes,
    adapter_from_bytes,
)
from .adapter_trainer import TrainConfig, TaskHead, TrainingLog, train_task_adapter, learning_rate_at
from .adapter_gradcheck import GradCheckReport, adapter_grad_check

__all__ = [
    'AdapterConfig', 'AdapterWeights', 'init_adapter', 'combine', 'save_adapter', 'load_adapter',
    'adapter_to_bytes', 'adapter_from_bytes',
    'TrainConfig', 'TaskHead', 'TrainingLog', 'train_task_adapter', 'learning_rate_at',
    'GradCheckReport', 'adapter_grad_check',
]
