"""
Slot-loop Monte Carlo engine.

Composes an activation policy with an access protocol, tracks per-user AoI and estimates
the network AAoI with a batch-means confidence interval. Slots run in blocks; every block
draws from its own substream, so a run is reproducible from (cfg, seed) alone.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Dict, Optional, Tuple

import numpy as np
from scipy.stats import t as student_t

from .access_protocols import Protocol, ProtocolSpec, SlotOutcome, contention_winners, grant_based_rho
from .amp_detect import AmpState, grant_free_round
from .aoi_analysis import algorithm1_aaoi, baseline_aaoi, grant_based_threshold_rho
from .config import SystemConfig
from .errors import ConfigurationError
from .model import ActivityVector, Stream, sample_pilots, slot_rng
from .scheduling import BernoulliPolicy, ThresholdPolicy, Policy, advance_intervals, initial_intervals

BLOCK_SLOTS = 512
CI_BATCHES = 64
PILOT_RUN_SLOTS = 20
BURN_IN_FACTOR = 10
# Floor for a pilot-run success estimate, keeps the burn-in finite
MIN_PILOT_RHO = 0.05


@dataclass(frozen=True)
class AoiLedger:
    """Per-user AoI plus the running sum over recorded slots and users."""
    aoi: np.ndarray
    sum_aoi: float = 0.0
    slots_counted: int = 0

    @classmethod
    def fresh(cls, n_users: int) -> 'AoiLedger':
        """Every user starts as if it had just updated."""
        return cls(aoi=np.ones(n_users, dtype=np.int64))

    @property
    def n_users(self) -> int:
        return self.aoi.shape[0]

    def aaoi(self) -> float:
        if self.slots_counted == 0:
            return math.nan
        return self.sum_aoi / (self.slots_counted * self.n_users)


@dataclass
class SimReport:
    aaoi_estimate: float
    ci95: float
    empirical_rho: float
    empirical_activation: float
    slots: int
    seed: int
    recorded_slots: int = 0
    burn_in: int = 0
    n_users: int = 0
    attempts: int = 0
    successes: int = 0
    protocol: str = ''
    policy: str = ''
    trace: Optional[List[Dict]] = field(default=None, repr=False)

    def to_row(self) -> Dict:
        return {
            'protocol': self.protocol,
            'policy': self.policy,
            'aaoi': self.aaoi_estimate,
            'ci95': self.ci95,
            'rho': self.empirical_rho,
            'activation': self.empirical_activation,
            'slots': self.slots,
            'burn_in': self.burn_in,
            'seed': self.seed,
        }


def advance_ledger(ledger: AoiLedger, success: np.ndarray, record) -> Tuple[AoiLedger, np.ndarray]:
    """
    Advance AoI over a block of slots. success is (slots, users): a success resets AoI to 1,
    anything else adds 1. record (bool or per-slot bool array) selects the slots that count.
    Returns the new ledger and the per-slot mean AoI.
    """
    success = np.atleast_2d(np.asarray(success, dtype=bool))
    n_slots, n_users = success.shape
    if n_users != ledger.n_users:
        raise ConfigurationError(f"success block has {n_users} users, ledger has {ledger.n_users}")
    record = np.broadcast_to(np.asarray(record, dtype=bool), (n_slots,))

    offsets = np.arange(n_slots)[:, None]
    last = np.maximum.accumulate(np.where(success, offsets, -1), axis=0)
    aoi_block = np.where(last >= 0, offsets - last + 1, ledger.aoi[None, :] + offsets + 1)

    slot_sums = aoi_block.sum(axis=1)
    new_ledger = AoiLedger(
        aoi=aoi_block[-1].copy(),
        sum_aoi=ledger.sum_aoi + float(slot_sums[record].sum()),
        slots_counted=ledger.slots_counted + int(record.sum())
    )
    return new_ledger, slot_sums / n_users


def step_aoi(ledger: AoiLedger, outcome: SlotOutcome, record: bool = True) -> AoiLedger:
    """One slot: succeeded users' AoI back to 1, everyone else +1."""
    success = np.zeros((1, ledger.n_users), dtype=bool)
    success[0, outcome.succeeded] = True
    new_ledger, _ = advance_ledger(ledger, success, record)
    return new_ledger


def batch_ci95(slot_means: np.ndarray, batches: int = CI_BATCHES) -> float:
    """Half-width of a 95% Student-t interval from contiguous batch means."""
    n_batches = min(batches, slot_means.size)
    if n_batches < 2:
        return 0.0
    means = np.array([chunk.mean() for chunk in np.array_split(slot_means, n_batches)])
    spread = means.std(ddof=1)
    if spread == 0:
        return 0.0
    return float(student_t.ppf(0.975, n_batches - 1) * spread / math.sqrt(n_batches))


def closed_form_aaoi(cfg: SystemConfig, protocol: ProtocolSpec, policy: Policy) -> Optional[float]:
    """Analytic AAoI when one exists for this protocol/policy pair, else None."""
    if protocol.kind is Protocol.GRANT_FREE:
        return None
    if isinstance(policy, BernoulliPolicy):
        if protocol.kind is Protocol.FIXED_RHO:
            return baseline_aaoi(policy.prob, protocol.rho)
        return baseline_aaoi(policy.prob, grant_based_rho(cfg.n_users, cfg.pilot_len, policy.prob))
    if protocol.kind is Protocol.FIXED_RHO:
        rho = protocol.rho
    else:
        rho = grant_based_threshold_rho(cfg.n_users, cfg.pilot_len, policy)
    if rho <= 0:
        return math.inf
    aaoi, _ = algorithm1_aaoi(policy, rho, tail_tol=1e-6)
    return aaoi


def default_burn_in(cfg: SystemConfig, protocol: ProtocolSpec, policy: Policy, slots: int, seed: int) -> int:
    """
    10x the expected AAoI: from the closed form when available, otherwise from a short
    pilot run's success rate. Never more than half of the slots.
    """
    expected = closed_form_aaoi(cfg, protocol, policy)
    if expected is None:
        pilot = run_simulation(cfg, protocol, policy, slots=PILOT_RUN_SLOTS, burn_in=0, seed=seed)
        rho_hat = max(pilot.empirical_rho, MIN_PILOT_RHO)
        if isinstance(policy, ThresholdPolicy):
            period = policy.force_thr
        else:
            period = 1.0 / policy.prob if policy.prob > 0 else math.inf
        expected = period / rho_hat

    cap = slots // 2
    if not math.isfinite(expected):
        return cap
    return min(int(math.ceil(BURN_IN_FACTOR * expected)), cap)


def _access_block(
    active: np.ndarray,
    protocol: ProtocolSpec,
    cfg: SystemConfig,
    rng: np.random.Generator,
    seed: int,
    first_slot: int,
    pilots: Optional[np.ndarray],
    diagnostics: Optional[List[AmpState]]
) -> Tuple[np.ndarray, int]:
    """Success mask for a block of activity rows, plus the false-alarm count."""
    if protocol.kind is Protocol.FIXED_RHO:
        return active & (rng.random(active.shape) < protocol.rho), 0

    success = np.zeros_like(active)
    false_alarms = 0
    for offset, row in enumerate(active):
        idx = np.flatnonzero(row)
        if protocol.kind is Protocol.GRANT_BASED:
            winners = contention_winners(idx, cfg.pilot_len, rng)
        else:
            slot = first_slot + offset
            outcome = grant_free_round(
                cfg, ActivityVector(row), slot_rng(seed, slot, Stream.CHANNEL), pilots=pilots,
                diagnostics=diagnostics, noise_rng=slot_rng(seed, slot, Stream.NOISE)
            )
            winners = outcome.succeeded
            false_alarms += outcome.false_alarms
        success[offset, winners] = True
    return success, false_alarms


def run_simulation(
    cfg: SystemConfig,
    protocol: ProtocolSpec,
    policy: Optional[Policy] = None,
    slots: int = 10000,
    burn_in: Optional[int] = None,
    seed: Optional[int] = None,
    warm_start: bool = True,
    trace: bool = False,
    diagnostics: Optional[List[AmpState]] = None
) -> SimReport:
    """
    Run `slots` slots; the first `burn_in` are not recorded.

    policy defaults to Bernoulli activation with cfg.activity_prob. burn_in defaults to
    default_burn_in(). With trace=True the report carries one row per slot
    (slot, active_count, success_count, mean_aoi). `diagnostics` collects AMP states.
    """
    seed = cfg.seed if seed is None else seed
    policy = policy or BernoulliPolicy(cfg.activity_prob)
    if slots < 1:
        raise ConfigurationError(f"slots must be >= 1, got {slots}")
    if burn_in is None:
        burn_in = default_burn_in(cfg, protocol, policy, slots, seed)
    if not 0 <= burn_in < slots:
        raise ConfigurationError(f"need 0 <= burn_in < slots, got burn_in={burn_in}, slots={slots}")

    n_users = cfg.n_users
    ledger = AoiLedger.fresh(n_users)
    pilots = None
    if protocol.kind is Protocol.GRANT_FREE:
        pilots = sample_pilots(cfg, slot_rng(seed, 0, Stream.PILOTS))

    intervals, probs = None, None
    if isinstance(policy, ThresholdPolicy):
        start = initial_intervals(n_users, policy, slot_rng(seed, 0, Stream.POLICY_INIT), warm_start)
        intervals, probs = start.intervals, policy.activity_probs()

    slot_means = np.empty(slots)
    active_counts = np.empty(slots, dtype=np.int64)
    success_counts = np.empty(slots, dtype=np.int64)

    for block, first in enumerate(range(0, slots, BLOCK_SLOTS)):
        size = min(BLOCK_SLOTS, slots - first)
        uniforms = slot_rng(seed, block, Stream.ACTIVITY).random((size, n_users))

        if intervals is None:
            active = uniforms < policy.prob
        else:
            active = np.empty((size, n_users), dtype=bool)
            for offset in range(size):
                intervals, active[offset] = advance_intervals(intervals, probs, uniforms[offset])

        success, _ = _access_block(
            active, protocol, cfg, slot_rng(seed, block, Stream.ACCESS), seed, first, pilots, diagnostics
        )
        record = np.arange(first, first + size) >= burn_in
        ledger, means = advance_ledger(ledger, success, record)

        slot_means[first:first + size] = means
        active_counts[first:first + size] = active.sum(axis=1)
        success_counts[first:first + size] = success.sum(axis=1)

    recorded = slice(burn_in, slots)
    attempts = int(active_counts[recorded].sum())
    successes = int(success_counts[recorded].sum())
    recorded_slots = slots - burn_in

    report = SimReport(
        aaoi_estimate=ledger.aaoi(),
        ci95=batch_ci95(slot_means[recorded]),
        empirical_rho=successes / attempts if attempts else 0.0,
        empirical_activation=attempts / (n_users * recorded_slots),
        slots=slots,
        seed=seed,
        recorded_slots=recorded_slots,
        burn_in=burn_in,
        n_users=n_users,
        attempts=attempts,
        successes=successes,
        protocol=protocol.label,
        policy=policy.label,
    )
    if trace:
        report.trace = [
            {
                'slot': slot,
                'active_count': int(active_counts[slot]),
                'success_count': int(success_counts[slot]),
                'mean_aoi': float(slot_means[slot]),
            }
            for slot in range(slots)
        ]
    return report


def merge_reports(reports: List[SimReport]) -> SimReport:
    """
    Combine replicas by recorded-slot weighting. Associative and order-independent:
    sums of weights, of weighted means and of squared weighted half-widths.
    """
    if not reports:
        raise ConfigurationError("nothing to merge")
    if len({r.n_users for r in reports}) != 1:
        raise ConfigurationError("cannot merge reports with different n_users")

    weights = np.array([r.recorded_slots for r in reports], dtype=float)
    total = weights.sum()
    attempts = sum(r.attempts for r in reports)
    successes = sum(r.successes for r in reports)
    n_users = reports[0].n_users
    recorded_slots = int(total)

    return SimReport(
        aaoi_estimate=math.fsum(w * r.aaoi_estimate for w, r in zip(weights, reports)) / total,
        ci95=math.sqrt(math.fsum((w * r.ci95) ** 2 for w, r in zip(weights, reports))) / total,
        empirical_rho=successes / attempts if attempts else 0.0,
        empirical_activation=attempts / (n_users * recorded_slots) if recorded_slots else 0.0,
        slots=sum(r.slots for r in reports),
        seed=min(r.seed for r in reports),
        recorded_slots=recorded_slots,
        burn_in=sum(r.burn_in for r in reports),
        n_users=n_users,
        attempts=attempts,
        successes=successes,
        protocol=reports[0].protocol,
        policy=reports[0].policy,
    )


def _run_replica(args) -> SimReport:
    cfg, protocol, policy, slots, burn_in, seed, warm_start = args
    return run_simulation(cfg, protocol, policy, slots=slots, burn_in=burn_in, seed=seed, warm_start=warm_start)


def run_replicas(
    cfg: SystemConfig,
    protocol: ProtocolSpec,
    policy: Optional[Policy] = None,
    slots: int = 10000,
    replicas: int = 1,
    burn_in: Optional[int] = None,
    seed: Optional[int] = None,
    warm_start: bool = True,
    workers: int = 1
) -> Tuple[SimReport, List[SimReport]]:
    """
    Independent replicas with seeds seed, seed+1, ...; returns (merged, per-replica).
    Replicas run on a process pool when workers > 1; results keep replica order.
    """
    if replicas < 1:
        raise ConfigurationError(f"replicas must be >= 1, got {replicas}")
    seed = cfg.seed if seed is None else seed
    jobs = [(cfg, protocol, policy, slots, burn_in, seed + k, warm_start) for k in range(replicas)]

    if workers > 1 and replicas > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replica, jobs))
    else:
        results = [_run_replica(job) for job in jobs]
    return merge_reports(results), results
