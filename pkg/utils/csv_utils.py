"""
Result CSV schemas and deterministic reading/writing.

Every command emits one of the schemas below with a header row and a fixed column order.
Numbers are formatted with format_value() so repeated runs give byte-identical files.
"""

import csv
import io
import math
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO

import numpy as np

# Sweep and simulate rows
RESULT_FIELDS = [
    'variable', 'value', 'protocol', 'policy', 'source',
    'aaoi', 'ci95', 'rho', 'activation', 'slots', 'seed', 'error'
]

# One row per threshold pair evaluated by Algorithm 1
ANALYSIS_FIELDS = [
    'sleep_thr', 'force_thr', 'base_prob', 'activation', 'rho', 'aaoi', 'horizon', 'tail_mass'
]

BASELINE_FIELDS = ['eps', 'rho', 'p_u', 'aaoi']

PAIR_FIELDS = ['sleep_thr', 'force_thr', 'base_prob', 'activation']

SIM_REPORT_FIELDS = ['protocol', 'policy', 'aaoi', 'ci95', 'rho', 'activation', 'slots', 'burn_in', 'seed']

TRACE_FIELDS = ['slot', 'active_count', 'success_count', 'mean_aoi']

AMP_TRACE_FIELDS = ['slot', 'iteration', 'tau_sq', 'mse']

FLOAT_FORMAT = '.10g'


def format_value(value) -> str:
    """Render one cell. None is empty, floats use a fixed significant-digit format."""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return format(value, FLOAT_FORMAT)
    return str(value)


def _write(stream: TextIO, rows: Iterable[Dict], fieldnames: List[str]) -> int:
    writer = csv.DictWriter(stream, fieldnames=fieldnames, lineterminator='\n', extrasaction='ignore')
    writer.writeheader()
    count = 0
    for row in rows:
        writer.writerow({key: format_value(row.get(key)) for key in fieldnames})
        count += 1
    return count


def rows_to_csv(rows: Iterable[Dict], fieldnames: List[str]) -> str:
    """CSV text with a header row; unknown keys are dropped, missing keys left empty."""
    buffer = io.StringIO()
    _write(buffer, rows, fieldnames)
    return buffer.getvalue()


def write_csv_safe(filepath: Optional[str], rows: Iterable[Dict], fieldnames: List[str]) -> int:
    """
    Write rows as UTF-8 CSV to filepath, or to stdout when filepath is None or '-'.
    Row order is preserved. Returns the number of data rows written.
    """
    if filepath is None or str(filepath) == '-':
        return _write(sys.stdout, rows, fieldnames)

    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, 'w', encoding='utf-8', newline='') as f:
        return _write(f, rows, fieldnames)


def read_csv_safe(filepath: str) -> List[Dict]:
    """
    Read CSV file safely, handling UTF-8 and missing files.
    Empty cells come back as None.
    """
    filepath = Path(filepath)
    if not filepath.exists():
        return []

    rows = []
    with open(filepath, 'r', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        for row in reader:
            rows.append({k: (v.strip() if v and v.strip() else None) for k, v in row.items()})
    return rows


def csv_header(filepath: str) -> List[str]:
    """Header row of a CSV file, [] when missing or empty."""
    filepath = Path(filepath)
    if not filepath.exists():
        return []
    with open(filepath, 'r', encoding='utf-8') as f:
        return next(csv.reader(f), [])


def parse_float(value: Optional[str]) -> Optional[float]:
    """Parse a numeric cell ('inf' and 'nan' included); None or garbage gives None."""
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None
