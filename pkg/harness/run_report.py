"""
Run Report Module
Per-run results: accuracy curve, summary metrics, cost counters and timing
"""

from dataclasses import dataclass, field, asdict, fields

from .metrics import compute_metrics

# fields that depend on the wall clock and are left out of determinism checks
TIMING_FIELDS = ('wall_time', 'eval_seconds_per_query')


@dataclass
class RunReport:
    method: str
    seed: int
    per_task_accuracy: list = field(default_factory=list)
    avg_accuracy: float = None
    final_accuracy: float = None
    forward_passes_per_query: list = field(default_factory=list)
    wall_time: dict = field(default_factory=dict)
    eval_seconds_per_query: list = field(default_factory=list)
    task_snapshots: list = field(default_factory=list)
    merge_count: int = 0
    cross_task_reads: int = 0
    status: str = 'complete'
    error: str = None
    notes: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def finalize(self):
        """Fill the summary metrics from the accuracy curve"""
        if self.per_task_accuracy:
            self.avg_accuracy, self.final_accuracy = compute_metrics(self.per_task_accuracy)
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def deterministic_view(self):
        """Report content excluding wall-clock measurements"""
        data = self.to_dict()
        for name in TIMING_FIELDS:
            data.pop(name, None)
        return data

    def curve_rows(self):
        rows = [['task', 'accuracy']]
        for t, acc in enumerate(self.per_task_accuracy, start=1):
            rows.append([str(t), format(float(acc), '.17g')])
        return rows
