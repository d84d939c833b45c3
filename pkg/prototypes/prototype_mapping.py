"""
Prototype Mapping Module
Centroid shifts between subspaces, centroid prototype mapping and the
step-summing drift compensation baseline
"""

from dataclasses import dataclass

import numpy as np

from errors import AlignmentError


@dataclass(frozen=True)
class CentroidShift:
    """Mean displacement of one task's prototypes from one subspace to another"""
    delta: np.ndarray
    from_tag: str
    to_tag: str
    task_id: int = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.delta)):
            raise AlignmentError("centroid shift has non-finite entries")


def centroid_shift(current, old):
    """
    delta = mean over classes of (current row - old row)

    Args:
        current: PrototypeMatrix of task t in the target subspace
        old: PrototypeMatrix of the same task in the source subspace

    Returns:
        CentroidShift from old.adapter_tag to current.adapter_tag
    """
    if current.task_id != old.task_id:
        raise AlignmentError(f"shift needs one task, got {current.task_id} and {old.task_id}")
    if not np.array_equal(current.class_ids, old.class_ids):
        raise AlignmentError(f"task {current.task_id}: class orderings differ")
    if current.adapter_tag == old.adapter_tag:
        raise AlignmentError(f"task {current.task_id}: both prototype sets live in {current.adapter_tag}")
    if current.dim != old.dim:
        raise AlignmentError(f"task {current.task_id}: dims {current.dim} and {old.dim} differ")
    delta = np.mean(current.rows - old.rows, axis=0)
    return CentroidShift(delta=delta, from_tag=old.adapter_tag, to_tag=current.adapter_tag, task_id=current.task_id)


def centroid_map(prototypes, shift):
    """Translate every row by the shift and retag into the shift's target subspace"""
    if shift.from_tag != prototypes.adapter_tag:
        raise AlignmentError(
            f"task {prototypes.task_id}: prototypes live in {prototypes.adapter_tag}, shift starts at {shift.from_tag}"
        )
    if shift.delta.shape != (prototypes.dim,):
        raise AlignmentError(f"shift of length {shift.delta.shape[0]} for {prototypes.dim}-dim prototypes")
    return prototypes.with_rows(prototypes.rows + shift.delta, adapter_tag=shift.to_tag, mapped=True)


def sdc_map(prototypes, shifts):
    """
    Accumulate consecutive per-step shifts (drift compensation baseline)

    Args:
        prototypes: PrototypeMatrix in the chain's first subspace
        shifts: CentroidShift list forming a contiguous chain of subspaces

    Returns:
        PrototypeMatrix moved by the sum of the shifts
    """
    if not shifts:
        return prototypes.with_rows(prototypes.rows.copy())
    tag = prototypes.adapter_tag
    total = np.zeros(prototypes.dim)
    for step, shift in enumerate(shifts):
        if shift.from_tag != tag:
            raise AlignmentError(f"broken shift chain at step {step}: expected start {tag}, got {shift.from_tag}")
        if shift.delta.shape != (prototypes.dim,):
            raise AlignmentError(f"shift {step} has length {shift.delta.shape[0]}, expected {prototypes.dim}")
        total = total + shift.delta
        tag = shift.to_tag
    return prototypes.with_rows(prototypes.rows + total, adapter_tag=tag, mapped=True)
