"""
Prototype Builder Module
Class-mean prototypes of a task under a given adapter
"""

import math

import numpy as np

from backbone import forward_features
from errors import DataError
from .prototype_store import PrototypeMatrix


def _exact_mean(rows):
    # exactly rounded column sums make the mean independent of sample order
    return np.array([math.fsum(col) for col in rows.T]) / rows.shape[0]


def prototypes_from_features(features, y, class_ids, task_id, adapter_tag):
    """
    Mean feature vector of every class, rows ordered by class id

    Args:
        features: (n, d) features
        y: (n,) global labels
        class_ids: the task's classes
        task_id: task number
        adapter_tag: subspace identifier

    Returns:
        PrototypeMatrix
    """
    features = np.asarray(features, dtype=np.float64)
    y = np.asarray(y)
    class_ids = np.sort(np.asarray(class_ids))
    rows = []
    for c in class_ids:
        members = features[y == c]
        if members.shape[0] == 0:
            raise DataError(f"task {task_id}: class {int(c)} has no samples to build a prototype")
        rows.append(_exact_mean(members))
    return PrototypeMatrix(task_id=task_id, adapter_tag=adapter_tag, rows=np.vstack(rows), class_ids=class_ids)


def compute_prototypes(backbone, adapter, split, class_ids, task_id, adapter_tag):
    """
    Prototypes of one task in the subspace of ``adapter``

    Args:
        backbone: frozen Backbone
        adapter: AdapterWeights or None for the raw backbone
        split: (x, y) samples of the task
        class_ids: the task's classes
        task_id: task number
        adapter_tag: identifier of the adapter's subspace

    Returns:
        PrototypeMatrix
    """
    x, y = split
    features = forward_features(backbone, adapter, np.asarray(x))
    return prototypes_from_features(features, y, class_ids, task_id, adapter_tag)
