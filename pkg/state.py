import os
import json
import tempfile
from datetime import datetime

from adapters import load_adapter, save_adapter
from errors import IncompleteArtifactsError

MANIFEST_NAME = 'manifest.json'


def _atomic_write(path, data, mode):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp_', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def atomic_write_text(path, text):
    """Write text via a temp file in the same directory, then rename"""
    _atomic_write(path, text, 'w')


def atomic_write_bytes(path, payload):
    _atomic_write(path, payload, 'wb')


def save_report(report_dict, path):
    """Save a run report (plain dict) as JSON"""
    atomic_write_text(path, json.dumps(report_dict, indent=2) + "\n")


def load_report(path):
    """Load a report dict, None if the file does not exist"""
    if not os.path.exists(path):
        return None
    with open(path, 'r') as f:
        return json.load(f)


def save_snapshots(snapshots, task_snapshots, directory, extra=None):
    """
    Write every merged snapshot as an adapter file plus a JSON manifest

    Args:
        snapshots: merged adapters, index 0 holds snapshot A1
        task_snapshots: task id -> snapshot index in force at that task
        directory: destination directory (created if missing)
        extra: additional manifest fields (e.g. resolved config)
    """
    os.makedirs(directory, exist_ok=True)
    files = []
    for index, adapter in enumerate(snapshots, start=1):
        name = f"A{index}.acmadpt"
        save_adapter(adapter, os.path.join(directory, name))
        files.append(name)
    manifest = {
        'snapshots': files,
        'task_snapshots': {str(t): k for t, k in task_snapshots.items()},
        'timestamp': datetime.now().isoformat(),
    }
    manifest.update(extra or {})
    atomic_write_text(os.path.join(directory, MANIFEST_NAME), json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_snapshots(directory, precision='float64'):
    """
    Read snapshots written by ``save_snapshots``

    Returns:
        (snapshots, task_snapshots, manifest)
    """
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        raise IncompleteArtifactsError(f"no snapshot manifest in {directory}")
    with open(path, 'r') as f:
        manifest = json.load(f)
    snapshots = []
    for name in manifest['snapshots']:
        file_path = os.path.join(directory, name)
        if not os.path.exists(file_path):
            raise IncompleteArtifactsError(f"snapshot file {file_path} is missing")
        snapshots.append(load_adapter(file_path, precision))
    task_snapshots = {int(t): int(k) for t, k in manifest['task_snapshots'].items()}
    return snapshots, task_snapshots, manifest
