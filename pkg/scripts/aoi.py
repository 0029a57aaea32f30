#!/usr/bin/env python3
"""
Command-line front end for the AoI toolkit.

  analyze baseline|thresholds|alg1   closed forms, threshold-pair solver, Algorithm 1
  simulate                           one Monte Carlo run (or merged replicas)
  sweep                              parameter sweeps with optional analysis overlay

CSV goes to stdout (or --out); status lines go to stderr.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from scripts.sweep import SweepSpec, parse_values, run_sweep, sweep_failed, threshold_pair_values
from utils.access_protocols import Protocol, ProtocolSpec, grant_based_rho
from utils.amp_detect import amp_trace_rows
from utils.aoi_analysis import (
    DEFAULT_TAIL_TOL, analysis_row, baseline_aaoi, grant_based_threshold_rho, solve_threshold_pairs
)
from utils.config import SystemConfig, build_config, load_config_file
from utils.csv_utils import (
    AMP_TRACE_FIELDS, ANALYSIS_FIELDS, BASELINE_FIELDS, PAIR_FIELDS, RESULT_FIELDS,
    SIM_REPORT_FIELDS, TRACE_FIELDS, write_csv_safe
)
from utils.errors import AoiToolkitError
from utils.scheduling import BernoulliPolicy, Policy, ThresholdPolicy
from utils.simulation import run_replicas, run_simulation

# Base probability used when a periodic pair (sleep = force - 1) is given without one
PERIODIC_BASE_PROB = 0.5
DEFAULT_THETA_MAX = 40


class UsageError(Exception):
    """Invalid flag combination; reported through argparse (exit status 2)."""


def status(args, message: str):
    if getattr(args, 'verbose', False):
        print(message, file=sys.stderr)


# Flags shared by every leaf command
def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='Flat key = value config file')
    common.add_argument('--seed', type=int, help='Master seed (unsigned 64-bit)')
    common.add_argument('--out', type=str, help='Write CSV here instead of stdout')
    common.add_argument('--verbose', action='store_true', help='Status lines and progress bars on stderr')
    common.add_argument('--n', dest='n_users', type=int, help='Total number of users N')
    common.add_argument('--eps', dest='activity_prob', type=float, help='Activation probability eps')
    common.add_argument('--l', dest='pilot_len', type=int, help='Pilot length L')
    common.add_argument('--snr', dest='per_user_snr_db', type=float, help='Per-user SNR in dB')
    common.add_argument('--amp-iters', dest='amp_iters', type=int, help='AMP iteration cap')
    return common


def _policy_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--policy', choices=['bernoulli', 'threshold'], help='Activation policy (default: bernoulli)')
    parser.add_argument('--sleep', dest='sleep_thr', type=int, help='Sleep threshold')
    parser.add_argument('--force', dest='force_thr', type=int, help='Forced-active threshold')
    parser.add_argument('--base-prob', dest='base_prob', type=float, help='Activation probability between thresholds')


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        description='Age-of-Information analysis and simulation for grant-based and grant-free access',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Closed-form AAoI of the memoryless baseline
  python scripts/aoi.py analyze baseline --eps 0.05 --rho 0.6065

  # Threshold pairs with the same activation as eps = 0.05
  python scripts/aoi.py analyze thresholds --target-eps 0.05 --theta-max 20

  # Grant-based simulation at the default base point
  python scripts/aoi.py simulate --protocol grant-based --slots 100000 --seed 7

  # Pilot-length sweep with analytic overlay
  python scripts/aoi.py sweep --variable pilot_len --values 40:380:20 --overlay --out results/pilot_len.csv
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    analyze = commands.add_parser('analyze', help='Analytic results')
    kinds = analyze.add_subparsers(dest='kind', required=True)

    baseline = kinds.add_parser('baseline', parents=[common], help='AAoI = 1/(eps*rho)')
    baseline.add_argument('--rho', type=float, help='Success probability (default: grant-based rho from N, L, eps)')
    baseline.set_defaults(handler=cmd_analyze)

    thresholds = kinds.add_parser('thresholds', parents=[common], help='Threshold pairs matching a target activation')
    thresholds.add_argument('--target-eps', dest='target_eps', type=float, help='Target activation (default: eps)')
    thresholds.add_argument('--theta-max', dest='theta_max', type=int, default=DEFAULT_THETA_MAX,
                            help=f'Largest forced-active threshold (default: {DEFAULT_THETA_MAX})')
    thresholds.add_argument('--tol', type=float, default=1e-6, help='Activation tolerance (default: 1e-6)')
    thresholds.add_argument('--rho', type=float, help='Also run Algorithm 1 for every pair at this rho')
    thresholds.add_argument('--tail-tol', dest='tail_tol', type=float, help='Algorithm 1 tail tolerance')
    thresholds.set_defaults(handler=cmd_analyze)

    alg1 = kinds.add_parser('alg1', parents=[common], help='Algorithm 1 AAoI for one threshold pair')
    alg1.add_argument('--sleep', dest='sleep_thr', type=int, required=True, help='Sleep threshold')
    alg1.add_argument('--force', dest='force_thr', type=int, required=True, help='Forced-active threshold')
    alg1.add_argument('--base-prob', dest='base_prob', type=float, help='Activation probability between thresholds')
    alg1.add_argument('--rho', type=float, help='Success probability (default: grant-based rho)')
    alg1.add_argument('--tail-tol', dest='tail_tol', type=float, help='Truncation tail tolerance')
    alg1.set_defaults(handler=cmd_analyze)

    simulate = commands.add_parser('simulate', parents=[common], help='Monte Carlo simulation')
    simulate.add_argument('--protocol', type=str, help='grant-based, grant-free or fixed-rho (default: grant-based)')
    simulate.add_argument('--rho', type=float, help='Success probability for fixed-rho')
    _policy_flags(simulate)
    simulate.add_argument('--slots', type=int, help='Number of slots (default: 10000)')
    simulate.add_argument('--burn-in', dest='burn_in', type=int, help='Unrecorded warm-up slots')
    simulate.add_argument('--replicas', type=int, help='Independent replicas, seeds seed..seed+k-1')
    simulate.add_argument('--workers', type=int, default=1, help='Worker processes for replicas')
    simulate.add_argument('--cold-start', dest='cold_start', action='store_true',
                          help='Start threshold intervals at 1 instead of the stationary law')
    simulate.add_argument('--trace', type=str, help='Per-slot trace CSV path')
    simulate.add_argument('--amp-trace', dest='amp_trace', type=str, help='AMP per-iteration diagnostics CSV path')
    simulate.set_defaults(handler=cmd_simulate)

    sweep = commands.add_parser('sweep', parents=[common], help='Parameter sweep')
    sweep.add_argument('--variable', required=True, choices=['pilot_len', 'activity_prob', 'n_users', 'threshold_pair'])
    sweep.add_argument('--values', type=str, help='Comma list or start:stop:step (not used for threshold_pair)')
    sweep.add_argument('--protocols', type=str, default='grant-based',
                       help='Comma list of grant-based, grant-free, fixed-rho (default: grant-based)')
    sweep.add_argument('--rho', type=float, help='Success probability for fixed-rho')
    _policy_flags(sweep)
    sweep.add_argument('--overlay', action='store_true', help='Also emit analysis rows')
    sweep.add_argument('--analysis-only', dest='analysis_only', action='store_true', help='Only analysis rows')
    sweep.add_argument('--theta-max', dest='theta_max', type=int, default=DEFAULT_THETA_MAX,
                       help='Largest forced-active threshold for threshold_pair sweeps')
    sweep.add_argument('--no-baseline', dest='no_baseline', action='store_true',
                       help='Skip the Bernoulli baseline point of a threshold_pair sweep')
    sweep.add_argument('--slots', type=int, help='Slots per point (default: 10000)')
    sweep.add_argument('--burn-in', dest='burn_in', type=int, help='Unrecorded warm-up slots per point')
    sweep.add_argument('--replicas', type=int, help='Replicas per point')
    sweep.add_argument('--tail-tol', dest='tail_tol', type=float, help='Algorithm 1 tail tolerance')
    sweep.add_argument('--workers', type=int, default=1, help='Worker processes (default: 1)')
    sweep.set_defaults(handler=cmd_sweep)

    return parser


def _overrides(args) -> Dict:
    keys = ['n_users', 'activity_prob', 'pilot_len', 'per_user_snr_db', 'amp_iters', 'seed',
            'protocol', 'rho', 'policy', 'sleep_thr', 'force_thr', 'base_prob',
            'slots', 'burn_in', 'replicas', 'tail_tol']
    values = {key: getattr(args, key, None) for key in keys}
    if getattr(args, 'cold_start', False):
        values['warm_start'] = False
    return values


def resolve_protocol(name: Optional[str], rho: Optional[float]) -> ProtocolSpec:
    kind = Protocol.parse(name or Protocol.GRANT_BASED.value)
    if kind is Protocol.FIXED_RHO:
        if rho is None:
            raise UsageError("fixed-rho needs --rho")
        return ProtocolSpec.fixed_rho(rho)
    return ProtocolSpec(kind)


def resolve_policy(cfg: SystemConfig, run: Dict) -> Policy:
    name = run.get('policy') or 'bernoulli'
    if name == 'bernoulli':
        return BernoulliPolicy(cfg.activity_prob)
    if name != 'threshold':
        raise UsageError(f"unknown policy {name!r}")
    return _threshold_policy(run)


def _threshold_policy(run: Dict) -> ThresholdPolicy:
    sleep_thr, force_thr = run.get('sleep_thr'), run.get('force_thr')
    if sleep_thr is None or force_thr is None:
        raise UsageError("threshold policy needs --sleep and --force")
    base_prob = run.get('base_prob')
    if base_prob is None:
        if sleep_thr != force_thr - 1:
            raise UsageError("--base-prob is required unless --sleep equals --force minus 1")
        base_prob = PERIODIC_BASE_PROB
    return ThresholdPolicy(sleep_thr, force_thr, base_prob)


def cmd_analyze(args, cfg: SystemConfig, run: Dict) -> Tuple[List[Dict], List[str]]:
    tail_tol = run.get('tail_tol') or DEFAULT_TAIL_TOL

    if args.kind == 'baseline':
        eps = cfg.activity_prob
        rho = run.get('rho')
        if rho is None:
            rho = grant_based_rho(cfg.n_users, cfg.pilot_len, eps)
            status(args, f"Using grant-based rho {rho:.6f} for N={cfg.n_users}, L={cfg.pilot_len}")
        return [{'eps': eps, 'rho': rho, 'p_u': eps * rho, 'aaoi': baseline_aaoi(eps, rho)}], BASELINE_FIELDS

    if args.kind == 'thresholds':
        target = args.target_eps if args.target_eps is not None else cfg.activity_prob
        pairs = solve_threshold_pairs(target, args.theta_max, tol=args.tol)
        status(args, f"Found {len(pairs)} threshold pairs for activation {target:g} with force_thr <= {args.theta_max}")
        rho = run.get('rho')
        if rho is None:
            rows = [
                {'sleep_thr': p.sleep_thr, 'force_thr': p.force_thr, 'base_prob': p.base_prob, 'activation': p.activation}
                for p in pairs
            ]
            return rows, PAIR_FIELDS
        return [analysis_row(p.policy(), rho, tail_tol) for p in pairs], ANALYSIS_FIELDS

    pol = _threshold_policy(run)
    rho = run.get('rho')
    if rho is None:
        rho = grant_based_threshold_rho(cfg.n_users, cfg.pilot_len, pol)
        status(args, f"Using grant-based rho {rho:.6f} for the threshold policy")
    return [analysis_row(pol, rho, tail_tol)], ANALYSIS_FIELDS


def cmd_simulate(args, cfg: SystemConfig, run: Dict) -> Tuple[List[Dict], List[str]]:
    protocol = resolve_protocol(run.get('protocol'), run.get('rho'))
    policy = resolve_policy(cfg, run)
    slots = run.get('slots') or 10000
    replicas = run.get('replicas') or 1
    warm_start = run.get('warm_start', True)

    if replicas > 1 and (args.trace or args.amp_trace):
        raise UsageError("--trace and --amp-trace need a single replica")
    if args.amp_trace and protocol.kind is not Protocol.GRANT_FREE:
        raise UsageError("--amp-trace is only available for grant-free")

    status(args, "=" * 60)
    status(args, f"Simulating {protocol.label} / {policy.label}: N={cfg.n_users}, L={cfg.pilot_len}, "
                 f"eps={cfg.activity_prob:g}, {slots} slots x {replicas} replica(s), seed {cfg.seed}")

    if replicas > 1:
        report, _ = run_replicas(
            cfg, protocol, policy, slots=slots, replicas=replicas, burn_in=run.get('burn_in'),
            warm_start=warm_start, workers=args.workers
        )
    else:
        diagnostics = [] if args.amp_trace else None
        report = run_simulation(
            cfg, protocol, policy, slots=slots, burn_in=run.get('burn_in'),
            warm_start=warm_start, trace=bool(args.trace), diagnostics=diagnostics
        )
        if args.trace:
            count = write_csv_safe(args.trace, report.trace, TRACE_FIELDS)
            status(args, f"Wrote {count} trace rows to {args.trace}")
        if args.amp_trace:
            amp_rows = [row for idx, state in enumerate(diagnostics) for row in amp_trace_rows(state, idx)]
            count = write_csv_safe(args.amp_trace, amp_rows, AMP_TRACE_FIELDS)
            status(args, f"Wrote {count} AMP diagnostic rows to {args.amp_trace}")

    status(args, f"  AAoI {report.aaoi_estimate:.4f} +/- {report.ci95:.4f}, rho {report.empirical_rho:.4f}")
    return [report.to_row()], SIM_REPORT_FIELDS


def cmd_sweep(args, cfg: SystemConfig, run: Dict) -> Tuple[List[Dict], List[str]]:
    protocols = tuple(
        resolve_protocol(name.strip(), run.get('rho')) for name in args.protocols.split(',') if name.strip()
    )
    policy = None
    if run.get('policy') == 'threshold':
        policy = _threshold_policy(run)

    if args.variable == 'threshold_pair':
        values = threshold_pair_values(cfg.activity_prob, args.theta_max)
    else:
        if not args.values:
            raise UsageError(f"--values is required for a {args.variable} sweep")
        values = parse_values(args.values, args.variable)

    spec = SweepSpec(
        variable=args.variable,
        values=values,
        base_config=cfg,
        protocols=protocols,
        analysis_overlay=args.overlay or args.analysis_only,
        simulate=not args.analysis_only,
        policy=policy,
        slots=run.get('slots') or 10000,
        burn_in=run.get('burn_in'),
        replicas=run.get('replicas') or 1,
        tail_tol=run.get('tail_tol') or DEFAULT_TAIL_TOL,
        include_baseline=not args.no_baseline,
    )
    status(args, "=" * 60)
    status(args, f"Sweeping {args.variable} over {len(values)} values, protocols: "
                 f"{', '.join(p.label for p in protocols)}")
    return run_sweep(spec, workers=args.workers, verbose=args.verbose), RESULT_FIELDS


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg, run = build_config(file_values, _overrides(args))
        rows, fieldnames = args.handler(args, cfg, run)
        count = write_csv_safe(args.out, rows, fieldnames)
    except UsageError as exc:
        parser.error(str(exc))
    except AoiToolkitError as exc:
        print(f"❌ Error: {exc}", file=sys.stderr)
        return 1

    if args.out:
        status(args, f"✅ Wrote {count} rows to {args.out}")
    if sweep_failed(rows):
        print("⚠️  Some points failed; see the error column", file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
