"""CSV and manifest writers.

All CSVs use a fixed column order, ``.`` as decimal separator and Python's
shortest round-trip float repr, so identical runs produce identical bytes.
Files are written to a temporary sibling and renamed into place; an
interrupted run never leaves a truncated CSV behind.
"""
import csv
import json
import logging
import os
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np

from src.learning.learner import RunTrace

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("step", "mne", "mnbe", "transfer_flag", "beta_hat", "alpha")
CURVE_COLUMNS = ("step", "median", "q25", "q75")
RUN_SUMMARY_COLUMNS = ("variant", "seed", "final_mne", "auc_mne")
BOUNDS_COLUMNS = (
    "n",
    "gamma_beta_star",
    "exact_sum",
    "thm2",
    "exact_alpha",
    "thm3",
    "thm2_ok",
    "thm3_ok",
    "thm2_ratio",
    "thm3_ratio",
)


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    os.replace(tmp_path, path)
    return path


def read_csv(path: Path) -> Dict[str, List[str]]:
    """Read a CSV into {column: values}, preserving column order."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        columns: Dict[str, List[str]] = {name: [] for name in (reader.fieldnames or [])}
        for row in reader:
            for name in columns:
                columns[name].append(row[name])
    return columns


def write_trace_csv(trace: RunTrace, path: Path) -> Path:
    rows = zip(
        range(1, trace.horizon + 1),
        trace.mne,
        trace.mnbe,
        trace.transfer_flag,
        trace.beta_hat,
        trace.alpha,
    )
    return write_csv(path, TRACE_COLUMNS, rows)


def write_curve_csv(median: np.ndarray, q25: np.ndarray, q75: np.ndarray, path: Path) -> Path:
    rows = zip(range(1, len(median) + 1), median, q25, q75)
    return write_csv(path, CURVE_COLUMNS, rows)


def write_manifest(manifest: dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=4, sort_keys=True)
        f.write("\n")
    os.replace(tmp_path, path)
    logger.info(f"Wrote manifest to {path}")
    return path
