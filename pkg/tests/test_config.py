"""
Tests for SystemConfig and config-file loading.
"""

import pytest
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from utils.config import SystemConfig, build_config, config_as_dict, load_config_file
from utils.errors import AoiToolkitError, ConfigurationError


class TestSystemConfig:
    """Validation of the shared parameters."""

    def test_defaults_are_base_point(self):
        """Defaults are N=2000, eps=0.05, L=200."""
        cfg = SystemConfig()
        assert (cfg.n_users, cfg.activity_prob, cfg.pilot_len) == (2000, 0.05, 200), "Base-point defaults"

    def test_zero_activity_allowed(self):
        """eps = 0 is a valid (degenerate) configuration."""
        assert SystemConfig(activity_prob=0.0).activity_prob == 0.0, "eps = 0 should be accepted"

    @pytest.mark.parametrize('changes', [
        {'n_users': 0},
        {'activity_prob': 1.5},
        {'activity_prob': -0.1},
        {'pilot_len': 0},
        {'amp_iters': 0},
        {'seed': -1},
        {'n_users': 10.5},
    ])
    def test_invalid_values_rejected(self, changes):
        """Out-of-range values raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            SystemConfig(**changes)

    def test_configuration_error_is_value_error(self):
        """Callers can catch ValueError or the toolkit base class."""
        with pytest.raises(ValueError):
            SystemConfig(n_users=-3)
        with pytest.raises(AoiToolkitError):
            SystemConfig(n_users=-3)

    def test_with_changes_validates(self):
        """with_changes returns a new validated config."""
        cfg = SystemConfig().with_changes(pilot_len=80)
        assert cfg.pilot_len == 80, "Change should apply"
        with pytest.raises(ConfigurationError):
            cfg.with_changes(pilot_len=-1)

    def test_config_as_dict_field_order(self):
        """Dict keys follow the field order."""
        assert list(config_as_dict(SystemConfig())) == [
            'n_users', 'activity_prob', 'pilot_len', 'per_user_snr_db', 'amp_iters', 'seed'
        ], "Unexpected key order"


class TestConfigFile:
    """Flat key = value files and precedence."""

    def test_load_values_and_comments(self, tmp_path):
        """Comments and blank lines are skipped, values typed per key."""
        path = tmp_path / 'run.cfg'
        path.write_text(
            "# base point\n"
            "n_users = 500\n"
            "\n"
            "activity_prob = 0.1   # eps\n"
            "protocol = fixed-rho\n"
            "warm_start = no\n",
            encoding='utf-8'
        )
        values = load_config_file(str(path))
        assert values == {'n_users': 500, 'activity_prob': 0.1, 'protocol': 'fixed-rho', 'warm_start': False}, \
            f"Unexpected values {values}"

    def test_unknown_key_names_line(self, tmp_path):
        """Unknown keys are reported with their line number."""
        path = tmp_path / 'bad.cfg'
        path.write_text("n_users = 10\nbogus = 3\n", encoding='utf-8')
        with pytest.raises(ConfigurationError, match=r":2: unknown config key 'bogus'"):
            load_config_file(str(path))

    def test_bad_value_rejected(self, tmp_path):
        """A value that does not parse names its key."""
        path = tmp_path / 'bad.cfg'
        path.write_text("pilot_len = many\n", encoding='utf-8')
        with pytest.raises(ConfigurationError, match='pilot_len'):
            load_config_file(str(path))

    def test_missing_file(self, tmp_path):
        """A missing file is a configuration error."""
        with pytest.raises(ConfigurationError, match='not found'):
            load_config_file(str(tmp_path / 'nope.cfg'))

    def test_overrides_beat_file(self):
        """defaults < file < overrides; None overrides are ignored."""
        cfg, run = build_config(
            {'n_users': 500, 'pilot_len': 40, 'slots': 100},
            {'n_users': 300, 'pilot_len': None, 'rho': 0.5}
        )
        assert cfg.n_users == 300, "Override should win"
        assert cfg.pilot_len == 40, "None override should keep the file value"
        assert cfg.activity_prob == 0.05, "Untouched key keeps its default"
        assert run == {'slots': 100, 'rho': 0.5}, f"Run options {run}"
