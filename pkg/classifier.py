"""Cosine prototype classifier assembled from stored prototypes"""
from dataclasses import dataclass

import numpy as np

from errors import IncompleteStoreError, ShapeError
from numerics import as_vector, row_l2_normalize


@dataclass(frozen=True)
class ClassifierWeights:
    """One row per class, concatenated task by task"""
    weight: np.ndarray
    class_ids: np.ndarray
    task_ids: np.ndarray

    @property
    def n_classes(self):
        return self.weight.shape[0]

    def normalized(self):
        return row_l2_normalize(self.weight)


def classifier_from_matrices(matrices):
    """Stack prototype matrices in (task_id, class_id) order"""
    if not matrices:
        raise IncompleteStoreError("no prototypes to build a classifier from")
    ordered = sorted(matrices, key=lambda p: p.task_id)
    weight = np.vstack([p.rows for p in ordered])
    class_ids = np.concatenate([p.class_ids for p in ordered])
    task_ids = np.concatenate([np.full(p.n_classes, p.task_id) for p in ordered])
    return ClassifierWeights(weight=weight, class_ids=class_ids, task_ids=task_ids)


def build_classifier(store, current_tag, allow_stale=False):
    """
    Classifier W = [P_1; ...; P_t] expressed in the current subspace

    Args:
        store: PrototypeStore
        current_tag: subspace the classifier operates in
        allow_stale: substitute raw prototypes for tasks never mapped into
            ``current_tag`` (the no-mapping ablation)

    Returns:
        ClassifierWeights
    """
    if not store.task_ids:
        raise IncompleteStoreError("prototype store is empty")
    expected = list(range(1, max(store.task_ids) + 1))
    missing = sorted(set(expected) - set(store.task_ids))
    if missing:
        raise IncompleteStoreError(f"prototype store is missing tasks {missing}")
    return classifier_from_matrices([store.resolve(t, current_tag, allow_stale) for t in store.task_ids])


def _pick(logits, class_ids):
    best = logits.max(axis=1, keepdims=True)
    sentinel = np.iinfo(np.int64).max
    return np.where(logits == best, class_ids[None, :].astype(np.int64), sentinel).min(axis=1)


def cosine_logits(classifier, features):
    """(n, C) cosine similarities between queries and class rows"""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != classifier.weight.shape[1]:
        raise ShapeError(f"features of shape {features.shape} for {classifier.weight.shape[1]}-dim prototypes")
    logits = row_l2_normalize(features) @ classifier.normalized().T
    return np.clip(logits, -1.0, 1.0)


def predict(classifier, feature):
    """
    Class whose prototype has the highest cosine similarity with ``feature``

    Ties go to the lowest class id.

    Returns:
        (class_id, logits)
    """
    feature = as_vector(feature, "feature")
    logits = cosine_logits(classifier, feature[None, :])
    return int(_pick(logits, classifier.class_ids)[0]), logits[0]


def predict_batch(classifier, features):
    """Predicted class ids for a batch of features"""
    logits = cosine_logits(classifier, features)
    return _pick(logits, classifier.class_ids)
