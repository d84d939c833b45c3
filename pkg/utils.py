"""Utility functions shared by the CLI and the experiment manager"""
import numpy as np


def print_banner(message):
    """Print formatted banner
    
    Args:
        message: Message to display in banner
    """
    print(f"\n{'='*60}\n{message}\n{'='*60}")


def mean_std(values):
    """Mean and sample standard deviation (0 for a single value)"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return None, None
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), std


def format_mean_std(values, scale=100.0):
    """'mean ± std' in percent points"""
    mean, std = mean_std(values)
    if mean is None:
        return "n/a"
    return f"{mean * scale:.2f} ± {std * scale:.2f}"
