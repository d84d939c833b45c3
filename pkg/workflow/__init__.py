"""
Workflow Module
Handles executing experiment methods over seeds
"""

from .workflow_executor import (
	METHOD_HANDLERS,
	build_stream,
	execute_landscape,
	execute_method,
	run_seed_job,
)
from .workflow_manager import ExperimentManager, summarize

__all__ = [
	'METHOD_HANDLERS', 'build_stream', 'execute_landscape', 'execute_method', 'run_seed_job',
	'ExperimentManager', 'summarize',
]
