"""
Grant-free activity detection.

The BS receives y = sqrt(xi) A x + z with x_n = a_n h_n and runs AMP with a
Bernoulli-Gaussian MMSE denoiser; users whose posterior activity exceeds 1/2 are detected.
"""

from dataclasses import dataclass, field
from typing import List, Dict, Optional, Set, Tuple, Union

import numpy as np
from scipy.special import expit

from .access_protocols import SlotOutcome, Protocol
from .config import SystemConfig
from .errors import ConfigurationError, NumericDomainError, DivergenceError
from .model import ActivityVector, ChannelRealization, complex_normal, pilot_energy, sample_channels

PRIOR_VARIANCE = 1.0
DETECTION_THRESHOLD = 0.5
EARLY_STOP_TOL = 1e-8
# Below this the residual is numerically zero (all-zero input or exact recovery)
TAU_SQ_FLOOR = 1e-24


@dataclass
class AmpState:
    """AMP iterate x^t, residual r^t, effective noise variance tau_t^2 and iteration index t."""
    estimate: np.ndarray
    residual: np.ndarray
    tau_sq: float
    iteration: int
    posterior: np.ndarray
    tau_trace: List[float] = field(default_factory=list)
    mse_trace: List[float] = field(default_factory=list)
    noise_trace: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class DetectionResult:
    detected: Set[int]
    posterior_activity: np.ndarray
    estimate: np.ndarray


def synthesize_received(
    chan: ChannelRealization,
    act: ActivityVector,
    snr_db: float,
    rng: Optional[np.random.Generator] = None,
    noiseless: bool = False
) -> np.ndarray:
    """
    Received pilot signal sqrt(xi) A x + z, z ~ CN(0, I_L).
    With noiseless=True (or no rng) the noise term is omitted.
    """
    if act.n_users != chan.n_users:
        raise ConfigurationError(
            f"activity vector has {act.n_users} users but channel has {chan.n_users}"
        )
    x = np.where(act.flags, chan.gains, 0.0)
    y = np.sqrt(pilot_energy(snr_db)) * (chan.pilot_matrix @ x)
    if not noiseless and rng is not None:
        y = y + complex_normal(rng, chan.pilot_len)
    return y


def mmse_denoise(
    r: Union[complex, np.ndarray],
    tau_sq: float,
    eps: float,
    beta: float = PRIOR_VARIANCE
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Posterior mean of X given r = X + tau*w under eps*CN(0, beta) + (1-eps)*delta_0.

    Returns (value, activity_posterior, divergence); works elementwise on arrays.
    The divergence is Re(d eta / d r) in the Wirtinger sense, i.e. the mean of the
    two real partials d eta_R/d r_R and d eta_I/d r_I, as used by the Onsager term.
    """
    if not tau_sq > 0:
        raise NumericDomainError(f"tau_sq must be positive, got {tau_sq}")
    if not 0 < eps <= 1:
        raise NumericDomainError(f"eps must be in (0, 1], got {eps}")
    if not beta > 0:
        raise NumericDomainError(f"beta must be positive, got {beta}")

    r = np.asarray(r, dtype=complex)
    power = np.abs(r) ** 2
    gain = beta / (beta + tau_sq)
    # d(log-odds)/d|r|^2
    slope = beta / (tau_sq * (beta + tau_sq))

    if eps == 1:
        omega = np.ones_like(power)
        spread = np.zeros_like(power)
    else:
        log_odds = np.log(eps / (1 - eps)) + np.log(tau_sq / (beta + tau_sq)) + power * slope
        omega = expit(log_odds)
        spread = power * slope * expit(-log_odds)

    value = omega * gain * r
    divergence = gain * omega * (1.0 + spread)
    return value, omega, divergence


def amp_iterate(
    y: np.ndarray,
    chan: ChannelRealization,
    cfg: SystemConfig,
    truth: Optional[np.ndarray] = None
) -> AmpState:
    """
    Run AMP from x^0 = 0, r^0 = y for at most cfg.amp_iters iterations.

    Works on y / sqrt(xi) so the prior variance stays 1 and the noise variance is 1/xi.
    tau_t^2 is re-estimated as ||r^t||^2 / L. Stops early when the relative residual change
    drops below 1e-8 or the residual vanishes. `truth` (the true x) enables MSE and
    matched-filter noise traces.
    """
    A = chan.pilot_matrix
    L, N = A.shape
    if y.shape != (L,):
        raise ConfigurationError(f"received signal has shape {y.shape}, expected ({L},)")
    if not chan.matches(cfg):
        raise ConfigurationError("channel realization does not match the configuration")

    eps = cfg.activity_prob
    y_scaled = np.asarray(y, dtype=complex) / np.sqrt(pilot_energy(cfg.per_user_snr_db))

    state = AmpState(
        estimate=np.zeros(N, dtype=complex),
        residual=y_scaled.copy(),
        tau_sq=float(np.vdot(y_scaled, y_scaled).real / L),
        iteration=0,
        posterior=np.zeros(N)
    )
    if eps == 0:
        return state

    for t in range(1, cfg.amp_iters + 1):
        r = state.residual
        tau_sq = float(np.vdot(r, r).real / L)
        if tau_sq < TAU_SQ_FLOOR:
            break

        matched = A.conj().T @ r + state.estimate
        value, posterior, divergence = mmse_denoise(matched, tau_sq, eps)
        onsager = (N / L) * r * float(np.mean(divergence))
        r_new = y_scaled - A @ value + onsager

        if not (np.all(np.isfinite(r_new)) and np.all(np.isfinite(value))):
            raise DivergenceError(t)

        state.tau_trace.append(tau_sq)
        if truth is not None:
            state.noise_trace.append(float(np.mean(np.abs(matched - truth) ** 2)))
            state.mse_trace.append(float(np.mean(np.abs(value - truth) ** 2)))

        change = np.linalg.norm(r_new - r) / max(np.linalg.norm(r), np.finfo(float).tiny)
        state.estimate = value
        state.residual = r_new
        state.posterior = posterior
        state.tau_sq = tau_sq
        state.iteration = t
        if change < EARLY_STOP_TOL:
            break

    return state


def detect_active(state: AmpState, cfg: SystemConfig) -> DetectionResult:
    """Users whose final posterior activity probability exceeds 1/2."""
    posterior = np.clip(np.asarray(state.posterior, dtype=float), 0.0, 1.0)
    detected = {int(n) for n in np.flatnonzero(posterior > DETECTION_THRESHOLD)}
    return DetectionResult(detected=detected, posterior_activity=posterior, estimate=state.estimate)


def grant_free_round(
    cfg: SystemConfig,
    act: ActivityVector,
    rng: np.random.Generator,
    pilots: Optional[np.ndarray] = None,
    noiseless: bool = False,
    diagnostics: Optional[List[AmpState]] = None,
    noise_rng: Optional[np.random.Generator] = None
) -> SlotOutcome:
    """
    One grant-free slot: channels, received signal, AMP, detection.
    Gains come from rng and receiver noise from noise_rng (rng when not given).
    Success = true active set intersected with the detected set (decoding is error-free).
    A slot without active users skips detection since nothing can succeed.
    """
    active = act.active_indices
    if active.size == 0:
        return SlotOutcome(active=active, succeeded=active, protocol_tag=Protocol.GRANT_FREE)

    chan = sample_channels(cfg, rng, pilots=pilots)
    noise_rng = rng if noise_rng is None else noise_rng
    y = synthesize_received(chan, act, cfg.per_user_snr_db, noise_rng, noiseless=noiseless)
    truth = np.where(act.flags, chan.gains, 0.0)
    state = amp_iterate(y, chan, cfg, truth=truth if diagnostics is not None else None)
    if diagnostics is not None:
        diagnostics.append(state)

    result = detect_active(state, cfg)
    detected = np.array(sorted(result.detected), dtype=np.int64)
    succeeded = np.intersect1d(active, detected)
    return SlotOutcome(
        active=active,
        succeeded=succeeded,
        protocol_tag=Protocol.GRANT_FREE,
        false_alarms=int(detected.size - succeeded.size)
    )


def amp_trace_rows(state: AmpState, slot: int) -> List[Dict]:
    """Per-iteration diagnostics for one slot as CSV rows (slot, iteration, tau_sq, mse)."""
    rows = []
    for idx, tau_sq in enumerate(state.tau_trace):
        mse = state.mse_trace[idx] if idx < len(state.mse_trace) else None
        rows.append({'slot': slot, 'iteration': idx + 1, 'tau_sq': tau_sq, 'mse': mse})
    return rows
