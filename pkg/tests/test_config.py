"""
Test suite for Config
"""

import json
import os
import tempfile

import pytest

from fluxtrade.config import Config
from fluxtrade.exceptions import ValidationError


class TestConfig:
    """Tests for layered configuration"""

    @pytest.fixture
    def temp_config(self):
        """Path of a temporary config file"""
        fd, path = tempfile.mkstemp(suffix='.json')
        os.close(fd)
        os.unlink(path)
        yield path
        if os.path.exists(path):
            os.unlink(path)

    def _write(self, path, payload):
        with open(path, 'w') as f:
            json.dump(payload, f)

    def test_defaults(self, temp_config):
        """Test defaults are used when no file exists"""
        config = Config(temp_config)
        assert config.get('solver.tol') == 1e-9
        assert config.get('sweep.threshold') == 1e-2
        assert config.get('bath.family') == 'ohmic'
        assert config.run == {}

    def test_get_missing_returns_default(self, temp_config):
        """Test get falls back for unknown paths"""
        config = Config(temp_config)
        assert config.get('solver.nothing', 7) == 7
        assert config.get('sweep.workers', 3) == 3

    def test_set_and_get(self, temp_config):
        """Test setting a known key"""
        config = Config(temp_config)
        config.set('solver.tol', 1e-8)
        assert config.get('solver.tol') == 1e-8

    def test_set_unknown_key(self, temp_config):
        """Test unknown keys are rejected"""
        config = Config(temp_config)
        with pytest.raises(ValidationError):
            config.set('solver.precision', 1)
        with pytest.raises(ValidationError):
            config.set('tol', 1)

    def test_file_overrides(self, temp_config):
        """Test a file overrides individual defaults"""
        self._write(temp_config, {'solver': {'tol': 1e-7}, 'sweep': {'workers': 2}})
        config = Config(temp_config)
        assert config.get('solver.tol') == 1e-7
        assert config.get('sweep.workers') == 2
        assert config.get('sweep.threshold') == 1e-2

    def test_unknown_section_rejected(self, temp_config):
        """Test an unknown section in a file is an error"""
        self._write(temp_config, {'database': {'path': 'x.db'}})
        with pytest.raises(ValidationError):
            Config(temp_config)

    def test_unknown_key_rejected(self, temp_config):
        """Test an unknown key in a known section is an error"""
        self._write(temp_config, {'solver': {'precision': 3}})
        with pytest.raises(ValidationError) as excinfo:
            Config(temp_config)
        assert excinfo.value.field == 'solver.precision'

    def test_run_keys_split_off(self, temp_config):
        """Test command and parameters are kept apart from settings"""
        self._write(temp_config, {
            'command': 'sweep',
            'parameters': {'r_imp': [1, 2]},
            'sweep': {'threshold': 0.05}
        })
        config = Config(temp_config)
        assert config.run == {'command': 'sweep', 'parameters': {'r_imp': [1, 2]}}
        assert config.get('sweep.threshold') == 0.05
        assert 'command' not in config.to_dict()

    def test_non_object_file_rejected(self, temp_config):
        """Test a JSON list is not a valid config"""
        self._write(temp_config, [1, 2, 3])
        with pytest.raises(ValidationError):
            Config(temp_config)

    def test_save_round_trip(self, temp_config):
        """Test saved settings load back"""
        config = Config(temp_config)
        config.set('spectrum.theta_samples', 64)
        config.save()
        assert Config(temp_config).get('spectrum.theta_samples') == 64

    def test_to_dict_is_a_copy(self, temp_config):
        """Test to_dict cannot mutate the live config"""
        config = Config(temp_config)
        data = config.to_dict()
        data['solver']['tol'] = 1.0
        assert config.get('solver.tol') == 1e-9
