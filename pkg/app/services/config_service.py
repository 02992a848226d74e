"""
Configuration Service for the bandit experiment runner
Resolves an ExperimentConfig from a named preset, a flat key = value file
and --key=value overrides, in that order
"""

import json
import logging
from dataclasses import fields
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional

from dotenv import dotenv_values

from bandit.errors import ConfigError
from experiments.harness import ExperimentConfig

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1

# Short spellings accepted in files and on the command line
ALIASES = {
    'epsilon': 'epsilons',
    'algorithm': 'algorithms',
    'reps': 'repetitions',
    'horizon': 'T',
}


def _split(value: Any) -> List[str]:
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [part.strip() for part in str(value).split(',') if part.strip()]


def _float_list(value: Any) -> List[float]:
    return [float(v) for v in _split(value)]


def _int_list(value: Any) -> List[int]:
    return [int(v) for v in _split(value)]


def _optional_float(value: Any) -> Optional[float]:
    if value is None or str(value).strip().lower() in ('', 'none'):
        return None
    return float(value)


def _optional_fraction(value: Any) -> Optional[float]:
    fraction = _optional_float(value)
    if fraction is not None and not 0.0 < fraction < 1.0:
        raise ValueError(f"must lie in (0, 1), got {fraction}")
    return fraction


def _optional_positive(value: Any) -> Optional[float]:
    number = _optional_float(value)
    if number is not None and not number > 0:
        raise ValueError(f"must be positive, got {number}")
    return number


def _seed(value: Any) -> int:
    seed = int(value)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


PARSERS: Dict[str, Callable[[Any], Any]] = {
    'd': int,
    'T': int,
    'D': float,
    'G': float,
    'epsilons': _float_list,
    'algorithms': _split,
    'repetitions': int,
    'seed': _seed,
    'perturbation': str,
    'preset': str,
    'nu_mode': str,
    'scale': float,
    'inner_nu': float,
    'kappa': _optional_float,
    'rho': _optional_float,
    'gamma': float,
    'horizons': _int_list,
    'workers': int,
    'eta': _optional_positive,
    'delta': _optional_fraction,
}


class ConfigService:
    """
    Centralized configuration management service
    Loads presets from config/presets.json (with in-code fallbacks) and merges
    file and command-line values on top of them
    """

    def __init__(self, project_root: Path):
        """
        Initialize the configuration service

        Args:
            project_root: Path to the project root directory
        """
        self.project_root = project_root
        self.config_dir = project_root / "config"

        self._load_configurations()

    def _load_configurations(self):
        """Load all configuration files"""
        self.presets = self._load_json_config('presets.json', self._get_fallback_presets())

    def _load_json_config(self, filename: str, fallback_data: Dict[str, Any] = None) -> Dict[str, Any]:
        """
        Load JSON configuration with fallback to default data

        Args:
            filename: Name of the JSON file to load
            fallback_data: Default data to use if file doesn't exist or fails to load

        Returns:
            Dictionary containing the configuration data
        """
        file_path = self.config_dir / filename

        try:
            if file_path.exists():
                with open(file_path, 'r', encoding='utf-8') as f:
                    return json.load(f)
            logger.warning(f"⚠️ Configuration file not found: {filename}")
            return fallback_data if fallback_data else {}
        except json.JSONDecodeError as e:
            logger.error(f"❌ Invalid JSON in {filename}: {e}")
            return fallback_data if fallback_data else {}
        except OSError as e:
            logger.error(f"❌ Error loading {filename}: {e}")
            return fallback_data if fallback_data else {}

    def _get_fallback_presets(self) -> Dict[str, Any]:
        """Fallback data for the experiment presets"""
        common = {'d': 5, 'T': 2000, 'D': 5.0, 'G': 1.0, 'repetitions': 10}
        return {
            'theorem': {
                **common,
                'epsilons': [0.0],
                'algorithms': ['lifted'],
                'perturbation': 'zero',
                'preset': 'theorem',
                'nu_mode': 'effective',
            },
            'section7': {
                **common,
                'epsilons': [0.0, 0.25, 0.5, 0.75, 1.0],
                'algorithms': ['lifted', 'classic', 'increasing_lr'],
                'perturbation': 'sinusoidal',
                'preset': 'section7',
                'nu_mode': 'literal',
            },
        }

    def get_preset_names(self) -> list:
        return list(self.presets.keys())

    def get_preset(self, name: str) -> Dict[str, Any]:
        """Get the values of a named preset"""
        if name not in self.presets:
            raise ConfigError(f"unknown preset '{name}' (available: {', '.join(self.presets)})", key='preset')
        return dict(self.presets[name])

    @staticmethod
    def normalize_key(key: str) -> str:
        """Map a file or flag key onto an ExperimentConfig field name, rejecting unknown keys"""
        key = key.strip().lstrip('-').replace('-', '_')
        key = ALIASES.get(key, key)
        if key not in PARSERS:
            raise ConfigError(f"unknown configuration key '{key}'", key=key)
        return key

    def read_config_file(self, path: Path) -> Dict[str, str]:
        """
        Read a flat key = value file with # comments

        Raises:
            ConfigError: the file is missing or names an unknown key
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}", key='config')
        raw = dotenv_values(path)
        values = {}
        for key, value in raw.items():
            if value is None:
                raise ConfigError(f"line '{key}' in {path} has no value", key=key)
            values[self.normalize_key(key)] = value
        logger.debug(f"Loaded {len(values)} keys from {path}")
        return values

    def parse_overrides(self, args: Iterable[str]) -> Dict[str, str]:
        """Turn ['--key=value', ...] into {field: value}"""
        values = {}
        for arg in args:
            if not arg.startswith('--') or '=' not in arg:
                raise ConfigError(f"unrecognized argument '{arg}' (expected --key=value)", key=arg)
            key, value = arg[2:].split('=', 1)
            values[self.normalize_key(key)] = value
        return values

    def coerce(self, values: Dict[str, Any]) -> Dict[str, Any]:
        typed = {}
        for key, value in values.items():
            key = self.normalize_key(key)
            try:
                typed[key] = PARSERS[key](value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"invalid value {value!r} for '{key}': {e}", key=key) from e
        return typed

    def build_config(self, preset: Optional[str] = None, config_file: Optional[Path] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        """
        Resolve an ExperimentConfig: preset values, then the config file, then overrides

        Args:
            preset: preset name; when None the file's or overrides' 'preset' key decides, else 'theorem'
            config_file: optional flat key = value file
            overrides: values from the command line, already keyed by field

        Returns:
            Validated ExperimentConfig
        """
        from_file = self.coerce(self.read_config_file(config_file)) if config_file else {}
        from_flags = self.coerce(overrides or {})
        name = preset or from_flags.get('preset') or from_file.get('preset') or 'theorem'

        merged = self.coerce(self.get_preset(name))
        merged.update(from_file)
        merged.update(from_flags)
        if preset and 'preset' not in from_flags:
            merged['preset'] = self.get_preset(name).get('preset', name)

        known = {f.name for f in fields(ExperimentConfig)}
        config = ExperimentConfig(**{k: v for k, v in merged.items() if k in known})
        logger.info(f"⚙️ Configuration resolved from preset '{name}'"
                    f"{f' and {config_file}' if config_file else ''}: d={config.d}, T={config.T}, "
                    f"eps={config.epsilons}, algorithms={config.algorithms}, reps={config.repetitions}")
        return config

