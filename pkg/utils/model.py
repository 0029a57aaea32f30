"""
Domain types and stochastic primitives shared by every module:
seeded substreams, user activation and channel realizations.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from .config import SystemConfig
from .errors import ConfigurationError

PILOT_NORM_TOL = 1e-9


class Stream(IntEnum):
    """Independent random streams; one per concern so protocols share activity draws."""
    ACTIVITY = 0
    CHANNEL = 1
    NOISE = 2
    ACCESS = 3
    POLICY_INIT = 4
    PILOTS = 5


def slot_rng(seed: int, block: int = 0, stream: Stream = Stream.ACTIVITY) -> np.random.Generator:
    """
    Counter-based generator for one (stream, block) pair.

    Philox keyed through SeedSequence(seed, spawn_key=(stream, block)): any block can be
    regenerated without replaying the ones before it.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.Philox(seq))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian CN(0, variance) samples."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def pilot_energy(snr_db: float) -> float:
    """
    Pilot energy xi for a per-user SNR in dB.
    Unit-norm pilots, unit-variance gains and unit noise variance make xi the SNR itself.
    """
    return float(10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class ActivityVector:
    """Per-user activation flags for one slot."""
    flags: np.ndarray

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=bool)
        if flags.ndim != 1:
            raise ConfigurationError(f"activity flags must be 1-D, got shape {flags.shape}")
        object.__setattr__(self, 'flags', flags)

    @property
    def n_users(self) -> int:
        return self.flags.shape[0]

    @property
    def active_indices(self) -> np.ndarray:
        return np.flatnonzero(self.flags)

    @property
    def count(self) -> int:
        return int(self.flags.sum())


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user complex gains h_n and the L x N pilot matrix A for one slot."""
    gains: np.ndarray
    pilot_matrix: np.ndarray

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=complex)
        pilots = np.asarray(self.pilot_matrix, dtype=complex)
        if gains.ndim != 1 or pilots.ndim != 2 or pilots.shape[1] != gains.shape[0]:
            raise ConfigurationError(
                f"pilot matrix {pilots.shape} does not match {gains.shape[0]} gains"
            )
        norms = np.sum(np.abs(pilots) ** 2, axis=0)
        if not np.all(np.abs(norms - 1.0) <= PILOT_NORM_TOL):
            raise ConfigurationError("pilot columns must have unit squared norm")
        object.__setattr__(self, 'gains', gains)
        object.__setattr__(self, 'pilot_matrix', pilots)

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    @property
    def pilot_len(self) -> int:
        return self.pilot_matrix.shape[0]

    def matches(self, cfg: SystemConfig) -> bool:
        return self.n_users == cfg.n_users and self.pilot_len == cfg.pilot_len


def bernoulli_flags(n_users: int, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(prob) flags."""
    return rng.random(n_users) < prob


def sample_activity(cfg: SystemConfig, rng: np.random.Generator) -> ActivityVector:
    """Each user independently active with probability eps."""
    return ActivityVector(bernoulli_flags(cfg.n_users, cfg.activity_prob, rng))


def sample_pilots(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Dedicated pilot book: entries CN(0, 1/L), then each column scaled to unit norm.
    """
    pilots = complex_normal(rng, (cfg.pilot_len, cfg.n_users), variance=1.0 / cfg.pilot_len)
    norms = np.sqrt(np.sum(np.abs(pilots) ** 2, axis=0))
    # Zero columns stay zero
    norms[norms == 0] = 1.0
    pilots /= norms
    return pilots


def sample_channels(
    cfg: SystemConfig,
    rng: np.random.Generator,
    pilots: Optional[np.ndarray] = None
) -> ChannelRealization:
    """
    Draw h_n ~ CN(0, 1) (path loss fixed to 1) and, unless a pilot book is given, the pilots.
    Gains are drawn first so a shared pilot book does not shift the gain stream.
    """
    gains = complex_normal(rng, cfg.n_users)
    if pilots is None:
        pilots = sample_pilots(cfg, rng)
    return ChannelRealization(gains=gains, pilot_matrix=pilots)
