"""
Prototypes Module
Handles class prototypes, their storage and their mapping between subspaces
"""

from .prototype_store import PrototypeMatrix, PrototypeStore, snapshot_index, snapshot_tag
from .prototype_builder import compute_prototypes, prototypes_from_features
from .prototype_mapping import CentroidShift, centroid_shift, centroid_map, sdc_map

__all__ = [
    'PrototypeMatrix', 'PrototypeStore', 'snapshot_index', 'snapshot_tag',
    'compute_prototypes', 'prototypes_from_features',
    'CentroidShift', 'centroid_shift', 'centroid_map', 'sdc_map',
]
