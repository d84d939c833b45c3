"""
Diagnostics Module
Prototype-alignment and merge-convergence curves plus report exporters
"""

from .alignment import (
    VARIANTS, AlignmentSeries, ConvergenceSeries,
    cosine_alignment_curve, merge_convergence_curve, suggest_threshold,
)
from .exporters import FORMATS, export_report, load_report, to_json_text

__all__ = [
    'VARIANTS', 'AlignmentSeries', 'ConvergenceSeries',
    'cosine_alignment_curve', 'merge_convergence_curve', 'suggest_threshold',
    'FORMATS', 'export_report', 'load_report', 'to_json_text',
]
