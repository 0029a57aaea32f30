#!/usr/bin/env python3
"""
Parameter sweeps.

A SweepSpec names one swept variable (pilot_len, activity_prob, n_users or threshold_pair),
its values, the protocols to run and whether closed-form/Algorithm 1 predictions are emitted
next to the simulations. Points run on a bounded process pool; rows come back in sweep order.
"""

import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from tqdm import tqdm

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from utils.access_protocols import Protocol, ProtocolSpec, grant_based_rho
from utils.aoi_analysis import (
    DEFAULT_TAIL_TOL, algorithm1_aaoi, baseline_aaoi, effective_activation,
    grant_based_threshold_rho, solve_threshold_pairs
)
from utils.config import SystemConfig
from utils.errors import AoiToolkitError, ConfigurationError
from utils.scheduling import BernoulliPolicy, Policy, ThresholdPolicy
from utils.simulation import run_replicas

VARIABLES = ('pilot_len', 'activity_prob', 'n_users', 'threshold_pair')
INT_VARIABLES = ('pilot_len', 'n_users')
BASELINE_VALUE = 'baseline'

SIMULATION = 'simulation'
ANALYSIS = 'analysis'


@dataclass(frozen=True)
class SweepSpec:
    """
    One sweep. For threshold_pair the values are ThresholdPolicy objects (usually from
    solve_threshold_pairs); for the other variables they are numbers.
    """
    variable: str
    values: Tuple
    base_config: SystemConfig
    protocols: Tuple[ProtocolSpec, ...] = (ProtocolSpec.grant_based(),)
    analysis_overlay: bool = False
    simulate: bool = True
    policy: Optional[ThresholdPolicy] = None
    slots: int = 10000
    burn_in: Optional[int] = None
    replicas: int = 1
    tail_tol: float = DEFAULT_TAIL_TOL
    include_baseline: bool = True

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigurationError(f"Unknown sweep variable {self.variable!r} (expected one of {', '.join(VARIABLES)})")
        if not self.values:
            raise ConfigurationError("sweep needs at least one value")
        if not self.protocols:
            raise ConfigurationError("sweep needs at least one protocol")
        if not (self.simulate or self.analysis_overlay):
            raise ConfigurationError("nothing to do: simulation and analysis are both off")

        if self.variable == 'threshold_pair':
            if not all(isinstance(v, ThresholdPolicy) for v in self.values):
                raise ConfigurationError("threshold_pair values must be threshold policies")
            keys = [(v.force_thr, v.sleep_thr) for v in self.values]
        else:
            if self.variable in INT_VARIABLES and not all(isinstance(v, int) for v in self.values):
                raise ConfigurationError(f"{self.variable} values must be integers")
            if self.variable == 'activity_prob' and self.policy is not None:
                raise ConfigurationError("an activity_prob sweep runs the Bernoulli policy; drop the threshold policy")
            keys = list(self.values)
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ConfigurationError(f"{self.variable} values must be strictly increasing")

    def points(self) -> List[Tuple[Union[str, int, float], SystemConfig, Policy]]:
        """(value, config, policy) per point, in output order."""
        cfg = self.base_config
        points = []
        if self.variable == 'threshold_pair':
            if self.include_baseline:
                points.append((BASELINE_VALUE, cfg, BernoulliPolicy(cfg.activity_prob)))
            for pol in self.values:
                points.append((f"{pol.sleep_thr}/{pol.force_thr}", cfg, pol))
            return points

        for value in self.values:
            point_cfg = cfg.with_changes(**{self.variable: value})
            points.append((value, point_cfg, self.policy or BernoulliPolicy(point_cfg.activity_prob)))
        return points


def parse_values(text: str, variable: str) -> Tuple:
    """
    Values as a comma list ("40,60,80") or an inclusive range "start:stop:step".
    Integer variables parse as ints.
    """
    cast = int if variable in INT_VARIABLES else float
    text = (text or '').strip()
    if not text:
        raise ConfigurationError("empty --values")
    try:
        if ':' in text:
            parts = [cast(p) for p in text.split(':')]
            if len(parts) != 3 or parts[2] <= 0:
                raise ConfigurationError(f"range must be start:stop:step with step > 0, got {text!r}")
            start, stop, step = parts
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + k * step for k in range(max(count, 0))]
            if cast is float:
                values = [round(v, 12) for v in values]
            return tuple(values)
        return tuple(cast(p) for p in text.split(',') if p.strip())
    except ValueError as exc:
        raise ConfigurationError(f"bad --values {text!r}: {exc}") from exc


def threshold_pair_values(target_eps: float, theta_max: int) -> Tuple[ThresholdPolicy, ...]:
    """Every feasible pair for the target activation, ordered by (force_thr, sleep_thr)."""
    pairs = solve_threshold_pairs(target_eps, theta_max)
    pairs.sort(key=lambda pair: (pair.force_thr, pair.sleep_thr))
    return tuple(pair.policy() for pair in pairs)


def _base_row(spec: SweepSpec, value, protocol: ProtocolSpec, policy: Policy, source: str) -> Dict:
    return {
        'variable': spec.variable,
        'value': value,
        'protocol': protocol.label,
        'policy': policy.label,
        'source': source,
    }


def _activation(policy: Policy) -> float:
    if isinstance(policy, ThresholdPolicy):
        return effective_activation(policy)
    return policy.prob


def predicted_aaoi(cfg: SystemConfig, protocol: ProtocolSpec, policy: Policy,
                   measured_rho: Optional[float], tail_tol: float) -> Tuple[float, float]:
    """
    (rho, aaoi) from the analysis. Grant-free has no closed-form rho, so the measured
    success rate of the matching simulation is used.
    """
    if protocol.kind is Protocol.FIXED_RHO:
        rho = protocol.rho
    elif protocol.kind is Protocol.GRANT_BASED:
        if isinstance(policy, ThresholdPolicy):
            rho = grant_based_threshold_rho(cfg.n_users, cfg.pilot_len, policy)
        else:
            rho = grant_based_rho(cfg.n_users, cfg.pilot_len, policy.prob)
    else:
        if measured_rho is None:
            raise ConfigurationError("grant-free analysis needs the simulated success rate; enable simulation")
        rho = measured_rho

    if isinstance(policy, BernoulliPolicy):
        return rho, baseline_aaoi(policy.prob, rho)
    if rho <= 0:
        return rho, math.inf
    aaoi, _ = algorithm1_aaoi(policy, rho, tail_tol=tail_tol)
    return rho, aaoi


def evaluate_point(args) -> List[Dict]:
    """
    All rows for one sweep point: per protocol a simulation row and/or an analysis row.
    Failures become rows with the error column set; the other rows are still produced.
    """
    spec, value, cfg, policy = args
    rows = []
    for protocol in spec.protocols:
        measured_rho = None
        if spec.simulate:
            row = _base_row(spec, value, protocol, policy, SIMULATION)
            try:
                report, _ = run_replicas(
                    cfg, protocol, policy, slots=spec.slots, replicas=spec.replicas, burn_in=spec.burn_in
                )
                measured_rho = report.empirical_rho
                row.update({
                    'aaoi': report.aaoi_estimate,
                    'ci95': report.ci95,
                    'rho': report.empirical_rho,
                    'activation': report.empirical_activation,
                    'slots': report.slots,
                    'seed': report.seed,
                })
            except AoiToolkitError as exc:
                row['error'] = str(exc)
            rows.append(row)

        if spec.analysis_overlay:
            row = _base_row(spec, value, protocol, policy, ANALYSIS)
            try:
                rho, aaoi = predicted_aaoi(cfg, protocol, policy, measured_rho, spec.tail_tol)
                row.update({'aaoi': aaoi, 'rho': rho, 'activation': _activation(policy)})
            except AoiToolkitError as exc:
                row['error'] = str(exc)
            rows.append(row)
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1, verbose: bool = False) -> List[Dict]:
    """
    Evaluate every point and return rows in sweep order, whatever order workers finish in.
    """
    tasks = [(spec, value, cfg, policy) for value, cfg, policy in spec.points()]
    progress = dict(total=len(tasks), desc=f"Sweep {spec.variable}", disable=not verbose, file=sys.stderr)

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(evaluate_point, tasks), **progress))
    else:
        results = [evaluate_point(task) for task in tqdm(tasks, **progress)]

    return [row for point_rows in results for row in point_rows]


def sweep_failed(rows: Sequence[Dict]) -> bool:
    return any(row.get('error') for row in rows)
