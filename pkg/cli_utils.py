"""
CLI utility functions for parsing seed lists, thresholds and key=value overrides.
"""
import math

from errors import ConfigError


def flatten_tokens(argv_tail):
    """Flatten a list of tokens that may include comma-separated values into a list of values."""
    values = []
    for token in argv_tail or []:
        if not token:
            continue
        if ',' in token:
            values.extend([p.strip() for p in token.split(',') if p.strip()])
        else:
            t = token.strip()
            if t:
                values.append(t)
    return values


def parse_seed_args(argv_tail):
    """Seed tokens ('1993', '1994,1995') as a list of ints, None if empty"""
    seeds = []
    for value in flatten_tokens(argv_tail):
        try:
            seeds.append(int(value))
        except ValueError:
            raise ConfigError(f"seed '{value}' is not an integer")
    return seeds or None


def parse_threshold(text):
    """Early-stop threshold: a positive integer, or 'inf'/'none' for no early stopping"""
    if isinstance(text, (int, float)):
        value = text
    elif str(text).strip().lower() in ('inf', 'infinity', 'none'):
        return math.inf
    else:
        try:
            value = int(str(text).strip())
        except ValueError:
            raise ConfigError(f"early-stop threshold '{text}' is neither an integer nor 'inf'")
    if value != math.inf and (value != int(value) or value < 1):
        raise ConfigError(f"early-stop threshold must be >= 1, got {text}")
    return value if value == math.inf else int(value)


def parse_thresholds(argv_tail):
    return [parse_threshold(v) for v in flatten_tokens(argv_tail)]


def parse_overrides(pairs):
    """['train.epochs=5', 'method=acmap'] -> {'train.epochs': '5', 'method': 'acmap'}"""
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition('=')
        if not sep or not key.strip():
            raise ConfigError(f"override '{pair}' is not of the form key=value")
        overrides[key.strip()] = value.strip()
    return overrides
