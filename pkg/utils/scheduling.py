"""
Per-user activation policies.

BernoulliPolicy activates every slot with probability eps. ThresholdPolicy keeps the
inactivity interval T[t]: a user sleeps while T <= sleep_thr, is forced active at
T = force_thr and activates with base_prob in between.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import ActivityVector


@dataclass(frozen=True)
class BernoulliPolicy:
    prob: float

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ConfigurationError(f"activation probability must be in [0, 1], got {self.prob}")

    @property
    def label(self) -> str:
        return 'bernoulli'


@dataclass(frozen=True)
class ThresholdPolicy:
    """
    Sleep threshold, forced-active threshold and base activation probability.
    With sleep_thr = force_thr - 1 the policy is deterministic with period force_thr
    and base_prob is never used.
    """
    sleep_thr: int
    force_thr: int
    base_prob: float

    def __post_init__(self):
        if self.sleep_thr < 0:
            raise ConfigurationError(f"sleep_thr must be >= 0, got {self.sleep_thr}")
        if self.force_thr < 1:
            raise ConfigurationError(f"force_thr must be >= 1, got {self.force_thr}")
        if self.sleep_thr >= self.force_thr:
            raise ConfigurationError(
                f"sleep_thr ({self.sleep_thr}) must be below force_thr ({self.force_thr})"
            )
        if not 0.0 < self.base_prob < 1.0:
            raise ConfigurationError(f"base_prob must be in (0, 1), got {self.base_prob}")

    @property
    def is_periodic(self) -> bool:
        return self.sleep_thr == self.force_thr - 1

    @property
    def label(self) -> str:
        return f"threshold({self.sleep_thr}/{self.force_thr})"

    def activity_probs(self) -> np.ndarray:
        """p_i for i = 1..force_thr (array index i-1)."""
        intervals = np.arange(1, self.force_thr + 1)
        probs = np.where(intervals <= self.sleep_thr, 0.0, self.base_prob)
        probs[-1] = 1.0
        return probs


Policy = Union[BernoulliPolicy, ThresholdPolicy]


@dataclass(frozen=True)
class IntervalState:
    """Inactivity interval T[t] per user; values stay in 1..force_thr."""
    intervals: np.ndarray

    def __post_init__(self):
        intervals = np.asarray(self.intervals, dtype=np.int64)
        if intervals.ndim != 1 or (intervals.size and intervals.min() < 1):
            raise ConfigurationError("intervals must be a 1-D array of positive integers")
        object.__setattr__(self, 'intervals', intervals)

    def check(self, pol: ThresholdPolicy):
        if self.intervals.size and self.intervals.max() > pol.force_thr:
            raise DomainError(f"interval above force_thr {pol.force_thr}")


def activity_prob_at(interval: int, pol: ThresholdPolicy) -> float:
    """p_i: 0 in the sleep region, base_prob in between, 1 at the forced state."""
    if not 1 <= interval <= pol.force_thr:
        raise DomainError(f"interval {interval} outside 1..{pol.force_thr}")
    if interval == pol.force_thr:
        return 1.0
    if interval <= pol.sleep_thr:
        return 0.0
    return pol.base_prob


def advance_intervals(intervals: np.ndarray, probs: np.ndarray, uniforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Array kernel for one policy step: activate with probs[T-1], reset active users to 1,
    increment the rest. Returns (new_intervals, active_mask).
    """
    active = uniforms < probs[intervals - 1]
    return np.where(active, 1, intervals + 1), active


def policy_step(
    state: IntervalState,
    pol: ThresholdPolicy,
    rng: np.random.Generator
) -> Tuple[IntervalState, ActivityVector]:
    """One slot of the threshold policy for every user."""
    state.check(pol)
    uniforms = rng.random(state.intervals.size)
    new_intervals, active = advance_intervals(state.intervals, pol.activity_probs(), uniforms)
    return IntervalState(new_intervals), ActivityVector(active)


def initial_intervals(
    n_users: int,
    pol: ThresholdPolicy,
    rng: np.random.Generator,
    warm_start: bool = True
) -> IntervalState:
    """
    Starting intervals: drawn from the stationary law of T[t] (warm start) or all ones.
    """
    if not warm_start:
        return IntervalState(np.ones(n_users, dtype=np.int64))

    # Import here to avoid circular dependency
    from .aoi_analysis import threshold_steady_state

    stationary = threshold_steady_state(pol).probs
    draws = rng.choice(pol.force_thr, size=n_users, p=stationary / stationary.sum())
    return IntervalState(draws + 1)
