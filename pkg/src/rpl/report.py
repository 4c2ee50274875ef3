"""Structured report files: nested key-value YAML, diffable and re-readable.

Reports are written with insertion-ordered keys and repr-level float
precision, so a rerun with identical inputs produces byte-identical
files. Volatile quantities (wall time, absolute paths outside the run
directory) are deliberately excluded by the callers.
"""

from __future__ import annotations

import numpy as np
import yaml


def _pyify(value):
    """Recursively convert numpy scalars/arrays into plain python objects."""
    if isinstance(value, dict):
        return {(_pyify(k) if not isinstance(k, str) else k): _pyify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_pyify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_pyify(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def write_report(path, data: dict):
    """Serialize a nested dict as YAML (stable key order, UTF-8)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(_pyify(data), fh, sort_keys=False, default_flow_style=False, allow_unicode=True)


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    return data
