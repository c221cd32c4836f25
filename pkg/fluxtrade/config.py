"""
Configuration management for fluxtrade
"""

import copy
import json
import math
import os
from typing import Any, Dict, Optional

from .exceptions import ValidationError


class Config:
    """Numerical defaults and run settings with dot-path access"""

    DEFAULT_CONFIG = {
        'solver': {
            'tol': 1e-9
        },
        'spectrum': {
            'theta': math.pi / 2,   # worst-case flux for dephasing
            'anchor_theta': 0.9 * math.pi,
            'theta_samples': 32
        },
        'bloch': {
            'grid_points': 101
        },
        'bath': {
            'family': 'ohmic',
            'temperature_k': 0.020,  # dilution-refrigerator base temperature
            'tau_constant': 1.0,
            'dephasing_constant': 1.0
        },
        'sweep': {
            'e_c_ref': 1.0,
            'threshold': 1e-2,
            'workers': None,
            'progress': True
        },
        'output': {
            'format': 'csv',
            'float_format': '.12e'
        },
        'logging': {
            'level': 'INFO',
            'file': None
        }
    }

    # keys of a run file that describe the invocation rather than settings
    RUN_KEYS = ('command', 'parameters')

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path or os.path.join(os.getcwd(), 'fluxtrade_config.json')
        self.run: Dict[str, Any] = {}
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file or use defaults"""
        config = copy.deepcopy(self.DEFAULT_CONFIG)
        if os.path.exists(self.config_path):
            with open(self.config_path, 'r') as f:
                user_config = json.load(f)
            if not isinstance(user_config, dict):
                raise ValidationError('config', "configuration file must hold a JSON object")
            for key in self.RUN_KEYS:
                if key in user_config:
                    self.run[key] = user_config.pop(key)
            self.merge(config, user_config)
        return config

    @classmethod
    def merge(cls, config: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
        """Merge overrides into config in place, rejecting unknown keys"""
        for section, values in overrides.items():
            if section not in cls.DEFAULT_CONFIG:
                raise ValidationError(section, "unknown configuration section")
            if not isinstance(values, dict):
                raise ValidationError(section, "section must be a JSON object")
            for key, value in values.items():
                if key not in cls.DEFAULT_CONFIG[section]:
                    raise ValidationError(f"{section}.{key}", "unknown configuration key")
                config[section][key] = value
        return config

    def save(self, path: Optional[str] = None):
        """Save current configuration to file"""
        with open(path or self.config_path, 'w') as f:
            json.dump(self.config, f, indent=2)

    def get(self, key: str, default=None):
        """Get configuration value"""
        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
            else:
                return default

        return value if value is not None else default

    def set(self, key: str, value: Any):
        """Set configuration value"""
        keys = key.split('.')
        if len(keys) != 2 or keys[0] not in self.DEFAULT_CONFIG \
                or keys[1] not in self.DEFAULT_CONFIG[keys[0]]:
            raise ValidationError(key, "unknown configuration key")
        self.config[keys[0]][keys[1]] = value

    def to_dict(self) -> Dict[str, Any]:
        """Get configuration as dictionary"""
        return copy.deepcopy(self.config)
