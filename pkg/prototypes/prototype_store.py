"""
Prototype Store Module
Per-task prototype matrices keyed by task and adapter snapshot, with CSV export
"""

from dataclasses import dataclass, replace

import numpy as np

from errors import AlignmentError, DataError, IncompleteStoreError


def snapshot_tag(index):
    """Identifier of merged snapshot number ``index`` (1-based)"""
    return f"A{index}"


def snapshot_index(tag):
    if not (tag.startswith("A") and tag[1:].isdigit()):
        raise AlignmentError(f"'{tag}' does not name a merged snapshot")
    return int(tag[1:])


@dataclass(frozen=True)
class PrototypeMatrix:
    """Class prototypes of one task computed in (or mapped to) one subspace"""
    task_id: int
    adapter_tag: str
    rows: np.ndarray
    class_ids: np.ndarray
    mapped: bool = False

    def __post_init__(self):
        rows = np.asarray(self.rows)
        class_ids = np.asarray(self.class_ids)
        if rows.ndim != 2 or rows.shape[0] != class_ids.shape[0]:
            raise AlignmentError(f"task {self.task_id}: {rows.shape} rows for {class_ids.shape[0]} class ids")
        if not np.all(np.isfinite(rows)):
            raise DataError(f"task {self.task_id}: prototypes have non-finite entries")

    @property
    def n_classes(self):
        return self.rows.shape[0]

    @property
    def dim(self):
        return self.rows.shape[1]

    def with_rows(self, rows, adapter_tag=None, mapped=None):
        return replace(
            self,
            rows=rows,
            adapter_tag=self.adapter_tag if adapter_tag is None else adapter_tag,
            mapped=self.mapped if mapped is None else mapped,
        )


class PrototypeStore:
    """
    Raw prototypes P_i(A_k(i)) plus, per task, the latest mapped version

    Raw entries are written once per task and never replaced; mapped entries
    are overwritten whenever the current subspace changes.
    """

    def __init__(self):
        self.raw = {}
        self.mapped = {}

    def put_raw(self, prototypes):
        if prototypes.task_id in self.raw:
            raise AlignmentError(f"raw prototypes of task {prototypes.task_id} are already stored")
        for other in self.raw.values():
            shared = np.intersect1d(other.class_ids, prototypes.class_ids)
            if shared.size:
                raise AlignmentError(f"classes {shared.tolist()} appear in tasks {other.task_id} and {prototypes.task_id}")
        self.raw[prototypes.task_id] = prototypes

    def put_mapped(self, prototypes):
        if prototypes.task_id not in self.raw:
            raise IncompleteStoreError(f"task {prototypes.task_id} has no raw prototypes to map")
        self.mapped[prototypes.task_id] = prototypes

    @property
    def task_ids(self):
        return sorted(self.raw)

    def stale_tasks(self, current_tag):
        """Tasks whose raw prototypes live in another subspace"""
        return [t for t in self.task_ids if self.raw[t].adapter_tag != current_tag]

    def resolve(self, task_id, current_tag, allow_stale=False):
        """Prototypes of ``task_id`` expressed in ``current_tag``"""
        if task_id not in self.raw:
            raise IncompleteStoreError(f"no prototypes stored for task {task_id}")
        raw = self.raw[task_id]
        if raw.adapter_tag == current_tag:
            return raw
        mapped = self.mapped.get(task_id)
        if mapped is not None and mapped.adapter_tag == current_tag:
            return mapped
        if allow_stale:
            return raw
        raise IncompleteStoreError(f"task {task_id} has no prototypes in subspace {current_tag}")

    def export_rows(self):
        """CSV rows: task_id, class_id, adapter_tag, mapped_flag, v0..v{d-1}"""
        entries = [self.raw[t] for t in self.task_ids] + [self.mapped[t] for t in sorted(self.mapped)]
        dim = entries[0].dim if entries else 0
        rows = [['task_id', 'class_id', 'adapter_tag', 'mapped_flag'] + [f"v{j}" for j in range(dim)]]
        for p in entries:
            for class_id, vec in zip(p.class_ids.tolist(), p.rows):
                rows.append([str(p.task_id), str(class_id), p.adapter_tag, '1' if p.mapped else '0']
                            + [format(float(v), '.17g') for v in vec])
        return rows

    def export_csv(self, path):
        from state import atomic_write_text
        atomic_write_text(path, "\n".join(",".join(r) for r in self.export_rows()) + "\n")
