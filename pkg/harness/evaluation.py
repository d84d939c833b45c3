"""
Evaluation Module
Structural forward-pass counting, phase timing and cumulative top-1 accuracy
"""

import time
from contextlib import contextmanager

import numpy as np

from classifier import predict_batch


class ForwardCounter:
    """Counts backbone passes spent on evaluation queries, per task"""

    def __init__(self):
        self.passes = {}
        self.queries = {}

    def record(self, task, passes, queries):
        self.passes[task] = self.passes.get(task, 0) + int(passes)
        self.queries[task] = self.queries.get(task, 0) + int(queries)

    def per_query(self, task):
        queries = self.queries.get(task, 0)
        if queries == 0:
            return 0
        passes = self.passes[task]
        if passes % queries:
            return passes / queries
        return passes // queries

    def series(self):
        return [self.per_query(t) for t in sorted(self.queries)]


class PhaseTimer:
    """Monotonic wall time per phase and task"""

    def __init__(self, phases):
        self.seconds = {phase: [] for phase in phases}

    def open_task(self):
        for values in self.seconds.values():
            values.append(0.0)

    @contextmanager
    def phase(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name][-1] += time.perf_counter() - start


def top1_accuracy(classifier, features, labels):
    """Fraction of queries whose predicted class equals the label"""
    labels = np.asarray(labels)
    if len(labels) == 0:
        return 0.0
    return float(np.mean(predict_batch(classifier, features) == labels))
