"""
Utility functions for the semi-exponential extremes toolkit.
"""

import os
import json
from dotenv import load_dotenv
from typing import Dict, Any, Optional

import numpy as np

CONFIG_FILE = "config.json"
SCHEMA_VERSION = 1
RETRY_KEY = 0x7265


class DomainError(ValueError):
    """An argument lies outside the domain of an analytic function or sampler."""


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field path."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class CacheMiss(LookupError):
    """A cached estimate required by a command is not available."""


class PathExhausted(RuntimeError):
    """A simulated path did not reach the requested level."""


class DegeneratePath(RuntimeError):
    """The normalising mass of a regenerative set sample vanished."""


def load_environment() -> None:
    """Load environment variables from .env file."""
    load_dotenv()


def get_output_dir(default: str = "results") -> str:
    """Output directory, overridable with EVT_OUTPUT_DIR."""
    return os.getenv('EVT_OUTPUT_DIR') or default


def get_thread_count(default: Optional[int] = None) -> int:
    """Worker count from EVT_THREADS, falling back to the CPU count."""
    value = os.getenv('EVT_THREADS')
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ConfigError("EVT_THREADS", f"expected an integer, got {value!r}")
    return default or os.cpu_count() or 1


def get_db_path(default: str = "evt_cache.db") -> str:
    """SQLite cache location, overridable with EVT_DB_PATH."""
    return os.getenv('EVT_DB_PATH') or default


def load_config(path: str = CONFIG_FILE) -> Dict[str, Any]:
    """Load configuration from file; a missing file gives an empty dict."""
    if not os.path.exists(path):
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            config = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"{path} is not valid JSON ({e})")
    if not isinstance(config, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    version = config.get('schema_version', SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version}, expected {SCHEMA_VERSION}")
    return config


def save_config(config: Dict[str, Any], path: str = CONFIG_FILE) -> None:
    """Save configuration to file."""
    payload = dict(config)
    payload['schema_version'] = SCHEMA_VERSION
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True)
    except IOError as e:
        print(f"Warning: Could not save config file: {e}")


def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Independent random stream for one unit of work.

    The stream depends only on the root seed and the integer keys (experiment id,
    grid index, rep index, ...), never on which worker runs it.

    Args:
        seed: Root seed of the run
        keys: Non-negative integers identifying the unit of work

    Returns:
        A PCG64-backed numpy Generator
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def retry_seed(seed: int) -> int:
    """Second fixed root seed for a rerun of a failed check; depends only on the first."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(RETRY_KEY,)).generate_state(1)[0])


def format_estimate(value: float, se: Optional[float] = None) -> str:
    """Format an estimate with its standard error for display."""
    if se is None:
        return f"{value:.5g}"
    return f"{value:.5g} ± {se:.2g}"


def format_verdict(passed: bool) -> str:
    """Format a pass/fail flag for display."""
    return "✅ PASS" if passed else "❌ FAIL"
