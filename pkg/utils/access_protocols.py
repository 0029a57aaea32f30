"""
Access protocols: grant-based slotted-ALOHA contention, the fixed-rho success channel,
and the SlotOutcome type shared with grant-free detection.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, FrozenSet

import numpy as np

from .errors import DomainError, ConfigurationError
from .model import ActivityVector


class Protocol(str, Enum):
    GRANT_BASED = 'grant_based'
    GRANT_FREE = 'grant_free'
    FIXED_RHO = 'fixed_rho'

    @classmethod
    def parse(cls, text: str) -> 'Protocol':
        """Accept both grant-based and grant_based spellings."""
        key = (text or '').strip().lower().replace('-', '_')
        for member in cls:
            if member.value == key:
                return member
        raise ConfigurationError(f"Unknown protocol: {text!r} (expected grant-based, grant-free or fixed-rho)")


@dataclass(frozen=True)
class ProtocolSpec:
    """A protocol plus its parameter (rho for the fixed-rho channel)."""
    kind: Protocol
    rho: Optional[float] = None

    def __post_init__(self):
        if self.kind is Protocol.FIXED_RHO:
            if self.rho is None or not 0.0 <= self.rho <= 1.0:
                raise ConfigurationError(f"fixed_rho needs rho in [0, 1], got {self.rho!r}")

    @classmethod
    def grant_based(cls) -> 'ProtocolSpec':
        return cls(Protocol.GRANT_BASED)

    @classmethod
    def grant_free(cls) -> 'ProtocolSpec':
        return cls(Protocol.GRANT_FREE)

    @classmethod
    def fixed_rho(cls, rho: float) -> 'ProtocolSpec':
        return cls(Protocol.FIXED_RHO, rho)

    @property
    def label(self) -> str:
        if self.kind is Protocol.FIXED_RHO:
            return f"fixed_rho({self.rho:g})"
        return self.kind.value


@dataclass(frozen=True)
class SlotOutcome:
    """
    Result of one access slot. Index arrays are sorted and 0-based.
    """
    active: np.ndarray
    succeeded: np.ndarray
    protocol_tag: Protocol
    false_alarms: int = 0

    def __post_init__(self):
        active = np.asarray(self.active, dtype=np.int64)
        succeeded = np.asarray(self.succeeded, dtype=np.int64)
        if succeeded.size and not np.isin(succeeded, active).all():
            raise ConfigurationError("succeeded users must be a subset of active users")
        object.__setattr__(self, 'active', active)
        object.__setattr__(self, 'succeeded', succeeded)

    @property
    def active_set(self) -> FrozenSet[int]:
        return frozenset(int(i) for i in self.active)

    @property
    def succeeded_set(self) -> FrozenSet[int]:
        return frozenset(int(i) for i in self.succeeded)


def contention_winners(active_idx: np.ndarray, pilot_len: int, rng: np.random.Generator) -> np.ndarray:
    """
    Each active user picks one of pilot_len sequences uniformly; a sequence chosen by
    exactly one user succeeds, any collision destroys every colliding transmission.
    """
    if active_idx.size == 0:
        return active_idx
    choices = rng.integers(pilot_len, size=active_idx.size)
    counts = np.bincount(choices, minlength=pilot_len)
    return active_idx[counts[choices] == 1]


def fixed_rho_winners(active_idx: np.ndarray, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Each active user succeeds independently with probability rho."""
    if active_idx.size == 0:
        return active_idx
    return active_idx[rng.random(active_idx.size) < rho]


def grant_based_round(pilot_len: int, act: ActivityVector, rng: np.random.Generator) -> SlotOutcome:
    """One slotted-ALOHA contention round over L orthogonal sequences."""
    if pilot_len < 1:
        raise DomainError(f"pilot_len must be >= 1, got {pilot_len}")
    active = act.active_indices
    return SlotOutcome(
        active=active,
        succeeded=contention_winners(active, pilot_len, rng),
        protocol_tag=Protocol.GRANT_BASED
    )


def fixed_rho_round(act: ActivityVector, rho: float, rng: np.random.Generator) -> SlotOutcome:
    """Bernoulli success channel: the abstraction behind the Markov AoI chains."""
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must be in [0, 1], got {rho}")
    active = act.active_indices
    return SlotOutcome(
        active=active,
        succeeded=fixed_rho_winners(active, rho, rng),
        protocol_tag=Protocol.FIXED_RHO
    )


def grant_based_rho(n_users: int, pilot_len: int, eps: float) -> float:
    """
    Probability that a tagged active user wins its sequence: none of the other N-1 users
    is both active and on the same sequence, (1 - eps/L)^(N-1).
    """
    if n_users < 1 or pilot_len < 1:
        raise DomainError(f"n_users and pilot_len must be >= 1, got {n_users}, {pilot_len}")
    if eps < 0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    ratio = eps / pilot_len
    if ratio > 1:
        raise DomainError(f"eps/pilot_len = {ratio:g} exceeds 1")
    if n_users == 1 or ratio == 0:
        return 1.0
    if ratio == 1:
        return 0.0
    return math.exp((n_users - 1) * math.log1p(-ratio))
