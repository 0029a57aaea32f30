"""
Filtering, sorting and pagination of result rows.
"""

import math
from collections import defaultdict
from typing import Dict, List, Optional

from utils.csv_utils import parse_float

SORT_FIELDS = ('value', 'aaoi', 'rho', 'activation', 'protocol')


def filter_results(
    rows: List[Dict],
    protocol: Optional[str] = None,
    source: Optional[str] = None,
    variable: Optional[str] = None,
    policy: Optional[str] = None,
    errors_only: Optional[bool] = None
) -> List[Dict]:
    """
    Exact-match filters (protocol accepts grant-based or grant_based).
    errors_only=True keeps failed points, False drops them.
    """
    filtered = rows

    if protocol:
        wanted = protocol.strip().lower().replace('-', '_')
        filtered = [r for r in filtered if (r.get('protocol') or '').lower() == wanted]

    if source:
        filtered = [r for r in filtered if r.get('source') == source]

    if variable:
        filtered = [r for r in filtered if r.get('variable') == variable]

    if policy:
        filtered = [r for r in filtered if r.get('policy') == policy]

    if errors_only is not None:
        filtered = [r for r in filtered if bool(r.get('error')) == errors_only]

    return filtered


def _numeric_key(value: Optional[str]):
    # Non-numeric cells (threshold-pair labels, empty) sort after numbers
    number = parse_float(value)
    if number is None or math.isnan(number):
        return (1, value or '')
    return (0, number)


def sort_results(rows: List[Dict], sort_by: str = "value", order: str = "asc") -> List[Dict]:
    reverse = order.lower() == "desc"
    if sort_by == 'protocol':
        return sorted(rows, key=lambda r: r.get('protocol') or '', reverse=reverse)
    return sorted(rows, key=lambda r: _numeric_key(r.get(sort_by)), reverse=reverse)


def paginate_results(rows: List[Dict], limit: int = 50, offset: int = 0) -> List[Dict]:
    limit = min(limit, 500)
    offset = max(offset, 0)
    return rows[offset:offset + limit]


def summarize_results(rows: List[Dict]) -> Dict:
    """Row counts, failed points and the lowest AAoI per (protocol, source)."""
    counts = defaultdict(int)
    best = {}
    for row in rows:
        key = f"{row.get('protocol')}/{row.get('source')}"
        counts[key] += 1
        aaoi = parse_float(row.get('aaoi'))
        if row.get('error') or aaoi is None or math.isnan(aaoi):
            continue
        if key not in best or aaoi < parse_float(best[key]['aaoi']):
            best[key] = {'variable': row.get('variable'), 'value': row.get('value'),
                         'policy': row.get('policy'), 'aaoi': row.get('aaoi')}

    return {
        'total_rows': len(rows),
        'error_rows': sum(1 for r in rows if r.get('error')),
        'by_group': dict(sorted(counts.items())),
        'best_aaoi': dict(sorted(best.items())),
    }
