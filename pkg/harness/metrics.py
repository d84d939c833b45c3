"""
Metrics Module
Average and final accuracy over a task sequence
"""

from errors import DataError
from numerics import compensated_mean


def compute_metrics(per_task_accuracy):
    """
    Average accuracy over all tasks and accuracy after the last task

    Args:
        per_task_accuracy: accuracies in [0, 1], one per task

    Returns:
        tuple: (average accuracy, final accuracy)
    """
    values = [float(a) for a in per_task_accuracy]
    if not values:
        raise DataError("no per-task accuracies to summarize")
    for t, a in enumerate(values, start=1):
        if not 0.0 <= a <= 1.0:
            raise DataError(f"accuracy of task {t} is {a}, outside [0, 1]")
    return compensated_mean(values), values[-1]
