#!/usr/bin/env python3
"""
Validation script for result CSVs written by `aoi.py sweep`.
Checks the schema, value ranges and error rows, and optionally the trend of AAoI against
the swept value for every (protocol, policy, source) group. Reports only, never rewrites.
"""

import math
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple

sys.path.insert(0, str(Path(__file__).parent.parent))

from utils.csv_utils import RESULT_FIELDS, csv_header, parse_float, read_csv_safe

TRENDS = ('decreasing', 'increasing', 'u-shape')
SOURCES = {'simulation', 'analysis'}


class ValidationReport:
    """Container for validation results."""
    def __init__(self):
        self.errors = []
        self.warnings = []
        self.info = []

    def add_error(self, message: str, row: Dict = None):
        self.errors.append(_describe(message, row))

    def add_warning(self, message: str, row: Dict = None):
        self.warnings.append(_describe(message, row))

    def add_info(self, message: str):
        self.info.append(message)

    @property
    def ok(self) -> bool:
        return not self.errors

    def print_report(self, stream=None):
        """Human-readable report (stderr by default)."""
        stream = stream or sys.stderr
        print("=" * 80, file=stream)
        print("Result CSV Validation Report", file=stream)
        print("=" * 80, file=stream)

        if self.errors:
            print(f"\n❌ ERRORS ({len(self.errors)}):", file=stream)
            for error in self.errors:
                print(f"  • {error}", file=stream)
        else:
            print("\n✅ No errors found", file=stream)

        if self.warnings:
            print(f"\n⚠️  WARNINGS ({len(self.warnings)}):", file=stream)
            for warning in self.warnings:
                print(f"  • {warning}", file=stream)

        if self.info:
            print(f"\nℹ️  INFO ({len(self.info)}):", file=stream)
            for info in self.info:
                print(f"  • {info}", file=stream)
        print("\n" + "=" * 80, file=stream)


def _describe(message: str, row: Optional[Dict]) -> str:
    if not row:
        return message
    return (f"{message} | {row.get('variable')}={row.get('value')} "
            f"{row.get('protocol')}/{row.get('policy')}/{row.get('source')}")


def validate_schema(header: List[str], report: ValidationReport):
    if header != RESULT_FIELDS:
        report.add_error(f"Header {header} does not match expected columns {RESULT_FIELDS}")


def validate_rows(rows: List[Dict], report: ValidationReport):
    """Ranges: aaoi >= 1 (inf allowed), rho and activation in [0, 1], ci95 >= 0."""
    for row in rows:
        if row.get('error'):
            report.add_error(f"Point failed: {row['error']}", row)
            continue
        if row.get('source') not in SOURCES:
            report.add_error(f"Unknown source {row.get('source')!r}", row)

        aaoi = parse_float(row.get('aaoi'))
        if aaoi is None or math.isnan(aaoi):
            report.add_error("Missing or non-numeric aaoi", row)
        elif aaoi < 1.0:
            report.add_error(f"AAoI below 1: {aaoi}", row)
        elif math.isinf(aaoi):
            report.add_warning("Infinite AAoI (no successful updates)", row)

        for field in ('rho', 'activation'):
            value = parse_float(row.get(field))
            if value is not None and not 0.0 <= value <= 1.0:
                report.add_error(f"{field} outside [0, 1]: {value}", row)

        ci95 = parse_float(row.get('ci95'))
        if ci95 is not None and ci95 < 0:
            report.add_error(f"Negative ci95: {ci95}", row)


def group_series(rows: List[Dict]) -> Dict[Tuple[str, str, str], List[Tuple[float, float]]]:
    """(protocol, policy, source) -> [(value, aaoi)] sorted by value, numeric points only."""
    series = defaultdict(list)
    for row in rows:
        value, aaoi = parse_float(row.get('value')), parse_float(row.get('aaoi'))
        if row.get('error') or value is None or aaoi is None:
            continue
        series[(row.get('protocol'), row.get('policy'), row.get('source'))].append((value, aaoi))
    return {key: sorted(points) for key, points in series.items()}


def check_trend(
    points: List[Tuple[float, float]],
    trend: str,
    min_range: Optional[Tuple[float, float]] = None
) -> Optional[str]:
    """None when the series follows the trend, else a reason."""
    values = [v for v, _ in points]
    aaois = [a for _, a in points]
    if len(points) < 2:
        return "fewer than two points"

    if trend == 'decreasing':
        bad = [values[k + 1] for k in range(len(aaois) - 1) if not aaois[k + 1] < aaois[k]]
        return f"not strictly decreasing at value(s) {bad}" if bad else None
    if trend == 'increasing':
        bad = [values[k + 1] for k in range(len(aaois) - 1) if not aaois[k + 1] > aaois[k]]
        return f"not strictly increasing at value(s) {bad}" if bad else None
    if trend == 'u-shape':
        best = min(range(len(aaois)), key=aaois.__getitem__)
        if best in (0, len(aaois) - 1):
            return f"minimum at the edge (value {values[best]})"
        if min_range and not min_range[0] <= values[best] <= min_range[1]:
            return f"minimum at {values[best]}, outside [{min_range[0]}, {min_range[1]}]"
        return None
    raise ValueError(f"unknown trend {trend!r}")


def validate_trend(rows: List[Dict], trend: str, report: ValidationReport,
                   min_range: Optional[Tuple[float, float]] = None, source: Optional[str] = None):
    for (protocol, policy, src), points in group_series(rows).items():
        if source and src != source:
            continue
        problem = check_trend(points, trend, min_range)
        if problem:
            report.add_error(f"{protocol}/{policy}/{src}: {problem}")
        else:
            report.add_info(f"{protocol}/{policy}/{src}: {trend} over {len(points)} points")


def validate_slower_growth(rows: List[Dict], slower: str, faster: str, report: ValidationReport,
                           source: str = 'simulation'):
    """AAoI of `slower` must grow less than that of `faster` over the swept range."""
    series = group_series(rows)

    def growth(protocol: str) -> Optional[float]:
        for (proto, _, src), points in series.items():
            if proto == protocol and src == source and len(points) >= 2:
                return points[-1][1] - points[0][1]
        return None

    slow, fast = growth(slower), growth(faster)
    if slow is None or fast is None:
        report.add_warning(f"Cannot compare growth of {slower} and {faster} ({source} rows missing)")
    elif not slow < fast:
        report.add_error(f"{slower} AAoI grows by {slow:.4g}, not slower than {faster} ({fast:.4g})")
    else:
        report.add_info(f"{slower} grows by {slow:.4g} vs {faster} {fast:.4g}")


def validate_all(rows: List[Dict], header: List[str]) -> ValidationReport:
    report = ValidationReport()
    if not rows:
        report.add_error("No rows found in CSV")
        return report
    report.add_info(f"Validating {len(rows)} rows")
    validate_schema(header, report)
    validate_rows(rows, report)
    return report


def _parse_range(text: Optional[str]) -> Optional[Tuple[float, float]]:
    if not text:
        return None
    low, high = (float(part) for part in text.split(':'))
    return low, high


def main(argv: Optional[List[str]] = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description='Validate a sweep result CSV',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Schema and ranges only
  python scripts/validate_results.py results/sweep.csv

  # AAoI must fall with the pilot length
  python scripts/validate_results.py results/pilot_len.csv --trend decreasing

  # U-shape in eps with the minimum between 0.08 and 0.12 (analysis rows)
  python scripts/validate_results.py results/eps.csv --trend u-shape --min-range 0.08:0.12 --source analysis
        """
    )
    parser.add_argument('csv', type=str, help='Result CSV to validate')
    parser.add_argument('--trend', choices=TRENDS, help='Expected AAoI trend against the swept value')
    parser.add_argument('--min-range', dest='min_range', type=str, help='lo:hi range for the u-shape minimum')
    parser.add_argument('--source', choices=sorted(SOURCES), help='Restrict trend checks to one source')
    parser.add_argument('--slower', type=str, help='slower,faster protocols: first must grow less than second')
    args = parser.parse_args(argv)

    csv_path = Path(args.csv)
    if not csv_path.exists():
        print(f"Error: {csv_path} not found.", file=sys.stderr)
        return 1

    print(f"Loading {csv_path}...", file=sys.stderr)
    rows = read_csv_safe(str(csv_path))
    report = validate_all(rows, csv_header(str(csv_path)))
    if args.trend:
        validate_trend(rows, args.trend, report, _parse_range(args.min_range), args.source)
    if args.slower:
        slower, faster = (part.strip() for part in args.slower.split(','))
        validate_slower_growth(rows, slower, faster, report, source=args.source or 'simulation')

    report.print_report()
    return 0 if report.ok else 1


if __name__ == '__main__':
    sys.exit(main())
