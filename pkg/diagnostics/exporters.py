"""
Exporters Module
JSON and CSV export of run reports, diagnostic curves and landscape grids
"""

import json
import math

import numpy as np

from errors import AcmapError, ConfigError
from harness.run_report import RunReport
from merging import LandscapeGrid
import state
from .alignment import AlignmentSeries, ConvergenceSeries

FORMATS = ('json', 'csv')


def _jsonable(value):
    """Plain JSON types; floats keep 17 significant digits through repr"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ('inf' if value > 0 else '-inf')
    return value


def _as_dict(obj):
    if isinstance(obj, RunReport):
        return obj.to_dict()
    if isinstance(obj, AlignmentSeries):
        return {'anchor_task': obj.anchor_task, 'variant': obj.variant, 'class_ids': obj.class_ids,
                't_values': obj.t_values, 'curves': obj.curves, 'mean_curve': obj.mean_curve}
    if isinstance(obj, ConvergenceSeries):
        return {'t_values': obj.t_values, 'cos': obj.cos}
    if isinstance(obj, LandscapeGrid):
        return {'grid_size': obj.grid_size, 'rows': [list(r) for r in obj.valid_rows()],
                'vertex_errors': obj.vertex_errors()}
    if isinstance(obj, dict):
        return obj
    raise ConfigError(f"cannot export object of type {type(obj).__name__}")


def _csv_rows(obj):
    if isinstance(obj, RunReport):
        return obj.curve_rows()
    if isinstance(obj, (AlignmentSeries, ConvergenceSeries)):
        return obj.rows()
    if isinstance(obj, LandscapeGrid):
        return [['u', 'v', 'error']] + [[format(float(x), '.17g') for x in row] for row in obj.valid_rows()]
    raise ConfigError(f"no CSV layout for object of type {type(obj).__name__}")


def to_json_text(obj):
    return json.dumps(_jsonable(_as_dict(obj)), indent=2) + "\n"


def export_report(obj, path, format='json'):
    """
    Write a RunReport, alignment/convergence series or landscape grid

    Args:
        obj: object to export (a plain dict is accepted for JSON)
        path: destination file
        format: 'json' or 'csv'

    Returns:
        path written
    """
    if format not in FORMATS:
        raise ConfigError(f"unknown export format '{format}', expected one of {FORMATS}")
    if format == 'json':
        text = to_json_text(obj)
    else:
        text = "\n".join(",".join(row) for row in _csv_rows(obj)) + "\n"
    try:
        state.atomic_write_text(path, text)
    except OSError as e:
        raise AcmapError(f"cannot write {path}: {e}") from e
    return path


def load_report(path):
    """Read back a JSON RunReport export"""
    data = state.load_report(path)
    if data is None:
        raise AcmapError(f"cannot read {path}: no such file")
    return RunReport.from_dict(data)
