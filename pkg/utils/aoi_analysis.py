"""
Closed-form and Markov-chain AoI analysis.

- Memoryless baseline: geometric AoI law, AAoI = 1 / (eps * rho).
- Threshold policy: stationary law of the inactivity interval, the joint (AoI, interval)
  chain computed row by row (Algorithm 1), and a solver for threshold pairs that keep
  the long-run activation probability fixed.
- Explicit transition matrices and a power-iteration solver serve as oracles.
"""

import math
from dataclasses import dataclass
from typing import List, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, TruncationError, ConvergenceError
from .scheduling import ThresholdPolicy

INFINITE_AAOI = math.inf
BASELINE_TAIL_TOL = 1e-12
DEFAULT_TAIL_TOL = 1e-10
HORIZON_CAP = 10 ** 6
# Bisection keeps base_prob strictly inside (0, 1)
PROB_EDGE = 1e-12


@dataclass(frozen=True)
class SteadyStateDist:
    """Stationary probabilities of states 1..truncation (array index n-1)."""
    probs: np.ndarray
    truncation: int
    tail_mass_bound: float

    def mean(self) -> float:
        states = np.arange(1, self.probs.size + 1)
        return math.fsum(states * self.probs)


@dataclass(frozen=True)
class JointStateTable:
    """
    pi_{j,i}: AoI j = 1..horizon (row j-1) by interval i = 1..force_thr (column i-1).
    tail_mass is the probability of AoI beyond the horizon.
    """
    table: np.ndarray
    tail_mass: float

    @property
    def horizon(self) -> int:
        return self.table.shape[0]

    def aoi_marginal(self) -> np.ndarray:
        return np.array([math.fsum(row) for row in self.table])

    def interval_marginal(self) -> np.ndarray:
        return np.array([math.fsum(col) for col in self.table.T])


# ---------------------------------------------------------------------------
# Memoryless baseline
# ---------------------------------------------------------------------------

def baseline_aaoi(eps: float, rho: float) -> float:
    """AAoI = 1/p_u with p_u = eps*rho; p_u = 0 gives INFINITE_AAOI."""
    p_u = eps * rho
    if eps < 0 or rho < 0 or p_u > 1:
        raise DomainError(f"eps*rho must lie in [0, 1], got eps={eps}, rho={rho}")
    if p_u == 0:
        return INFINITE_AAOI
    return 1.0 / p_u


def baseline_steady_state(p_u: float, tail_tol: float = BASELINE_TAIL_TOL) -> SteadyStateDist:
    """
    Geometric AoI law pi_n = p_u (1-p_u)^(n-1), truncated where both the tail mass and the
    tail's contribution to the first moment fall below tail_tol.
    """
    if not 0 < p_u <= 1:
        raise DomainError(f"p_u must be in (0, 1], got {p_u}")
    if p_u == 1:
        return SteadyStateDist(probs=np.array([1.0]), truncation=1, tail_mass_bound=0.0)

    q = 1.0 - p_u
    n = max(1, math.ceil(math.log(tail_tol) / math.log(q)))
    # Tail moment sum_{k>n} k p q^(k-1) = q^n (n + 1/p)
    while q ** n * (n + 1.0 / p_u) >= tail_tol:
        n = int(n * 1.1) + 1
    states = np.arange(n)
    probs = p_u * np.power(q, states)
    return SteadyStateDist(probs=probs, truncation=n, tail_mass_bound=q ** n)


# ---------------------------------------------------------------------------
# Threshold policy
# ---------------------------------------------------------------------------

def threshold_steady_state(pol: ThresholdPolicy) -> SteadyStateDist:
    """
    Stationary law of T[t]: constant up to index sleep_thr+1, then geometric with
    ratio (1 - base_prob) up to force_thr.
    """
    n = np.arange(1, pol.force_thr + 1)
    decay = np.maximum(n - pol.sleep_thr - 1, 0)
    unnormalized = np.power(1.0 - pol.base_prob, decay)
    probs = unnormalized / math.fsum(unnormalized)
    return SteadyStateDist(probs=probs, truncation=pol.force_thr, tail_mass_bound=0.0)


def effective_activation(pol: ThresholdPolicy) -> float:
    """Long-run activation probability, equal to pi~_1."""
    return float(threshold_steady_state(pol).probs[0])


def _pi1(sleep_thr: int, force_thr: int, base_prob: float) -> float:
    geometric = sum((1.0 - base_prob) ** i for i in range(1, force_thr - sleep_thr))
    return 1.0 / (1.0 + sleep_thr + geometric)


@dataclass(frozen=True)
class ThresholdPair:
    sleep_thr: int
    force_thr: int
    base_prob: float
    activation: float

    def policy(self) -> ThresholdPolicy:
        return ThresholdPolicy(self.sleep_thr, self.force_thr, self.base_prob)


def solve_threshold_pairs(target_eps: float, theta_max: int, tol: float = 1e-6) -> List[ThresholdPair]:
    """
    All (sleep_thr, force_thr, base_prob) with |pi~_1 - target_eps| <= tol and force_thr <= theta_max.

    Integer sweep over sleep_thr, bisection on base_prob. pi~_1 increases from 1/force_thr
    (base_prob -> 0) to 1/(1+sleep_thr) (base_prob -> 1). The periodic pair
    sleep_thr = force_thr - 1 has pi~_1 = 1/force_thr for any base_prob; it is reported
    with base_prob = target_eps. Solutions only reachable at base_prob -> 0 or 1 act as the
    periodic pair of period force_thr or sleep_thr + 1 and are not repeated.
    """
    if not 0 < target_eps < 1:
        raise DomainError(f"target_eps must be in (0, 1), got {target_eps}")
    if theta_max < 1:
        raise DomainError(f"theta_max must be >= 1, got {theta_max}")

    pairs = []
    for force_thr in range(1, theta_max + 1):
        for sleep_thr in range(force_thr):
            if sleep_thr == force_thr - 1:
                activation = 1.0 / force_thr
                if abs(activation - target_eps) <= tol:
                    pairs.append(ThresholdPair(sleep_thr, force_thr, target_eps, activation))
                continue

            def gap(b):
                return _pi1(sleep_thr, force_thr, b) - target_eps

            lo, hi = PROB_EDGE, 1.0 - PROB_EDGE
            g_lo, g_hi = gap(lo), gap(hi)
            # A solution at either edge behaves as a periodic pair, which is listed on its own
            if g_lo >= -tol or g_hi <= tol:
                continue
            base_prob = bisect(gap, lo, hi, xtol=1e-15, maxiter=200)

            pair_policy = ThresholdPolicy(sleep_thr, force_thr, base_prob)
            activation = effective_activation(pair_policy)
            if abs(activation - target_eps) <= tol:
                pairs.append(ThresholdPair(sleep_thr, force_thr, base_prob, activation))
    return pairs


def periodic_policy_aaoi(force_thr: int, rho: float) -> float:
    """
    Renewal-reward AAoI of the deterministic period-force_thr policy:
    inter-update time force_thr * Geometric(rho), mean AoI = (E[X^2]/E[X] + 1) / 2.
    """
    if not 0 < rho <= 1:
        raise DomainError(f"rho must be in (0, 1], got {rho}")
    return force_thr * (2.0 - rho) / (2.0 * rho) + 0.5


def joint_horizon(pol: ThresholdPolicy, rho: float, tail_tol: float) -> int:
    """
    Rows needed so that P(AoI > horizon) <= tail_tol. Every force_thr consecutive slots hold
    at least one attempt, so P(AoI > m*force_thr) <= (1-rho)^m.
    """
    if rho >= 1:
        return pol.force_thr
    m = max(1, math.ceil(math.log(tail_tol) / math.log(1.0 - rho)))
    return pol.force_thr * m


def algorithm1_aaoi(
    pol: ThresholdPolicy,
    rho: float,
    tail_tol: float = DEFAULT_TAIL_TOL,
    horizon_cap: int = HORIZON_CAP
) -> Tuple[float, JointStateTable]:
    """
    AAoI of the threshold policy over a Bernoulli(rho) success channel.

    pi_{1,1} = rho * sum_i pi~_i p_i; for j > 1:
      pi_{j,1} = (1-rho) * sum_{n=sleep_thr+1}^{force_thr} p_n pi_{j-1,n}
      pi_{j,i} = (1 - p_{i-1}) pi_{j-1,i-1},   1 < i <= force_thr
    then AAoI = sum_j j * sum_i pi_{j,i}. Row sums use compensated summation.
    """
    if not 0 < rho <= 1:
        raise DomainError(f"rho must be in (0, 1], got {rho}")
    if not 0 < tail_tol < 1:
        raise DomainError(f"tail_tol must be in (0, 1), got {tail_tol}")

    horizon = joint_horizon(pol, rho, tail_tol)
    capped = horizon > horizon_cap
    horizon = min(horizon, horizon_cap)

    stationary = threshold_steady_state(pol).probs
    p = pol.activity_probs()
    fail = p * (1.0 - rho)
    stay = 1.0 - p

    table = np.zeros((horizon, pol.force_thr))
    table[0, 0] = rho * math.fsum(stationary * p)
    for j in range(1, horizon):
        prev = table[j - 1]
        # p_n = 0 for n <= sleep_thr, so the full sum equals the range sleep_thr+1..force_thr
        table[j, 0] = math.fsum(fail * prev)
        table[j, 1:] = stay[:-1] * prev[:-1]

    marginal = np.array([math.fsum(row) for row in table])
    tail_mass = max(0.0, 1.0 - math.fsum(marginal))
    if capped and tail_mass > tail_tol:
        raise TruncationError(tail_mass, horizon, tail_tol)

    aaoi = math.fsum(np.arange(1, horizon + 1) * marginal)
    return aaoi, JointStateTable(table=table, tail_mass=tail_mass)


def grant_based_threshold_rho(n_users: int, pilot_len: int, pol: ThresholdPolicy) -> float:
    """
    Success probability of an attempt when every user runs `pol`: users stay independent
    and each is active with pi~_1 in steady state.
    """
    # Import here to avoid circular dependency
    from .access_protocols import grant_based_rho

    return grant_based_rho(n_users, pilot_len, effective_activation(pol))


def analysis_row(pol: ThresholdPolicy, rho: float, tail_tol: float = DEFAULT_TAIL_TOL) -> Dict:
    """CSV row for one policy: (sleep_thr, force_thr, base_prob, activation, rho, aaoi, horizon, tail_mass)."""
    aaoi, table = algorithm1_aaoi(pol, rho, tail_tol)
    return {
        'sleep_thr': pol.sleep_thr,
        'force_thr': pol.force_thr,
        'base_prob': pol.base_prob,
        'activation': effective_activation(pol),
        'rho': rho,
        'aaoi': aaoi,
        'horizon': table.horizon,
        'tail_mass': table.tail_mass,
    }


# ---------------------------------------------------------------------------
# Explicit chains and the brute-force oracle
# ---------------------------------------------------------------------------

def baseline_transition_matrix(p_u: float, n_states: int) -> np.ndarray:
    """AoI chain truncated to n_states; the last state keeps its failures."""
    P = np.zeros((n_states, n_states))
    P[:, 0] = p_u
    for n in range(n_states - 1):
        P[n, n + 1] = 1.0 - p_u
    P[-1, -1] += 1.0 - p_u
    return P


def threshold_transition_matrix(pol: ThresholdPolicy) -> np.ndarray:
    """Transition matrix Q of the interval chain over states 1..force_thr."""
    p = pol.activity_probs()
    size = pol.force_thr
    Q = np.zeros((size, size))
    for i in range(size):
        Q[i, 0] += p[i]
        if i + 1 < size:
            Q[i, i + 1] += 1.0 - p[i]
    return Q


def joint_transition_matrix(pol: ThresholdPolicy, rho: float, aoi_cap: int) -> np.ndarray:
    """
    Joint (AoI, interval) chain with AoI capped at aoi_cap. State (j, i) has index
    (j-1)*force_thr + (i-1). Rows j < aoi_cap of its stationary law equal Algorithm 1.
    """
    theta = pol.force_thr
    p = pol.activity_probs()
    size = aoi_cap * theta
    P = np.zeros((size, size))

    def index(j, i):
        return (j - 1) * theta + (i - 1)

    for j in range(1, aoi_cap + 1):
        nxt = min(j + 1, aoi_cap)
        for i in range(1, theta + 1):
            src = index(j, i)
            pi_ = p[i - 1]
            P[src, index(1, 1)] += pi_ * rho
            P[src, index(nxt, 1)] += pi_ * (1.0 - rho)
            if i < theta:
                P[src, index(nxt, i + 1)] += 1.0 - pi_
    return P


def brute_force_steady_state(transition: np.ndarray, tol: float = 1e-14, max_rounds: int = 64) -> np.ndarray:
    """
    Stationary distribution by power iteration from the uniform start.

    Iterates the lazy chain (P + I)/2, which has the same fixed point and no periodicity,
    and squares the step matrix every round, so round k applies 2^k steps.
    Stops when successive iterates differ by less than tol in max norm.
    """
    P = np.asarray(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DomainError(f"transition matrix must be square, got shape {P.shape}")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
        raise DomainError("transition matrix rows must be nonnegative and sum to 1")

    size = P.shape[0]
    step = 0.5 * (P + np.eye(size))
    x = np.full(size, 1.0 / size)
    diff = math.inf
    for round_no in range(1, max_rounds + 1):
        x_next = x @ step
        x_next /= x_next.sum()
        diff = float(np.max(np.abs(x_next - x)))
        x = x_next
        if diff < tol:
            return x
        step = step @ step
    raise ConvergenceError(diff, max_rounds)
