"""
System configuration and flat key=value config files.

Precedence is defaults < config file < explicit overrides (CLI flags).
"""

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple, Any

from .errors import ConfigurationError


@dataclass(frozen=True)
class SystemConfig:
    """
    Parameters shared by every experiment.

    Defaults are the experimental base point: N=2000, eps=0.05, L=200.
    """
    n_users: int = 2000
    activity_prob: float = 0.05
    pilot_len: int = 200
    per_user_snr_db: float = 20.0
    amp_iters: int = 25
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_users, int) or self.n_users < 1:
            raise ConfigurationError(f"n_users must be a positive integer, got {self.n_users!r}")
        # eps = 0 is admitted so the probability-zero activation case stays expressible
        if not 0.0 <= self.activity_prob <= 1.0:
            raise ConfigurationError(f"activity_prob must be in [0, 1], got {self.activity_prob!r}")
        if not isinstance(self.pilot_len, int) or self.pilot_len < 1:
            raise ConfigurationError(f"pilot_len must be a positive integer, got {self.pilot_len!r}")
        if not isinstance(self.amp_iters, int) or self.amp_iters < 1:
            raise ConfigurationError(f"amp_iters must be a positive integer, got {self.amp_iters!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def with_changes(self, **changes) -> 'SystemConfig':
        """Return a validated copy with some fields replaced."""
        return replace(self, **changes)


# Config-file keys and their parsers
def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SYSTEM_KEYS = {
    'n_users': int,
    'activity_prob': float,
    'pilot_len': int,
    'per_user_snr_db': float,
    'amp_iters': int,
    'seed': int,
}

RUN_KEYS = {
    'protocol': str,
    'rho': float,
    'policy': str,
    'sleep_thr': int,
    'force_thr': int,
    'base_prob': float,
    'slots': int,
    'burn_in': int,
    'replicas': int,
    'warm_start': _parse_bool,
    'tail_tol': float,
}


def load_config_file(filepath: str) -> Dict[str, Any]:
    """
    Read a flat `key = value` config file.
    Blank lines and `#` comments are ignored; unknown keys are an error.
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise ConfigurationError(f"Config file not found: {filepath}")

    values = {}
    with open(filepath, 'r', encoding='utf-8') as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigurationError(f"{filepath}:{line_no}: expected 'key = value', got {raw.strip()!r}")
            key, text = (part.strip() for part in line.split('=', 1))
            parser = SYSTEM_KEYS.get(key) or RUN_KEYS.get(key)
            if parser is None:
                raise ConfigurationError(f"{filepath}:{line_no}: unknown config key {key!r}")
            try:
                values[key] = parser(text)
            except ValueError as exc:
                raise ConfigurationError(f"{filepath}:{line_no}: bad value for {key}: {exc}") from exc
    return values


def build_config(
    file_values: Optional[Dict[str, Any]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    base: Optional[SystemConfig] = None
) -> Tuple[SystemConfig, Dict[str, Any]]:
    """
    Merge defaults, config-file values and overrides.

    Overrides whose value is None are treated as "not given".
    Returns (SystemConfig, run_options) where run_options holds the non-system keys.
    """
    merged = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    system_values = {k: v for k, v in merged.items() if k in SYSTEM_KEYS}
    run_options = {k: v for k, v in merged.items() if k not in SYSTEM_KEYS}

    base = base or SystemConfig()
    cfg = base.with_changes(**system_values) if system_values else base
    return cfg, run_options


def config_as_dict(cfg: SystemConfig) -> Dict[str, Any]:
    """SystemConfig as a plain dict, in field order."""
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
