"""Configuration loading utilities.

This module handles loading and merging the YAML configuration files
(smoothing defaults and benchmark protocol) and overlaying environment
overrides for the smoothing tool.
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
DEFAULT_CONFIG_PATH = str(CONFIG_DIR / "config.yaml")
DEFAULT_BENCHMARK_PATH = str(CONFIG_DIR / "benchmark.yaml")
ENV_PREFIX = "SMOOTHER_"


def _read_yaml(path: str, label: str) -> Dict[str, Any]:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{label} file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise yaml.YAMLError(f"{label} file must contain a mapping: {path}")
    return data


def load_config(
    config_path: str = DEFAULT_CONFIG_PATH, benchmark_path: str = DEFAULT_BENCHMARK_PATH
) -> Dict[str, Any]:
    """Load and merge YAML configuration files.

    Loads both config.yaml (smoothing and selection defaults) and
    benchmark.yaml (simulation protocol), merging them into a single
    configuration dictionary. Values from config.yaml take precedence over
    benchmark.yaml in case of duplicate keys.

    Args:
        config_path: Path to the main config YAML file.
        benchmark_path: Path to the benchmark config YAML file.

    Returns:
        Merged configuration dictionary containing all settings.

    Raises:
        FileNotFoundError: If either configuration file does not exist.
        yaml.YAMLError: If configuration files contain invalid YAML.
    """
    benchmark_cfg = _read_yaml(benchmark_path, "Benchmark configuration")
    main_cfg = _read_yaml(config_path, "Configuration")

    # Merge configs with main_cfg taking precedence
    return {**benchmark_cfg, **main_cfg}


def load_benchmark_overrides(path: str, config: Dict[str, Any]) -> Dict[str, Any]:
    """Overlay a user benchmark YAML (``--benchmark-config``) onto a config.

    Args:
        path: YAML file with UPPER_SNAKE_CASE keys.
        config: Configuration to overlay; left unchanged.

    Returns:
        New dictionary with the file's keys replacing existing ones.

    Raises:
        FileNotFoundError: If the file does not exist.
        yaml.YAMLError: If the file is not a YAML mapping.
    """
    return {**config, **_read_yaml(path, "Benchmark override")}


def apply_env_overrides(
    config: Dict[str, Any], prefix: str = ENV_PREFIX, dotenv_path: Optional[str] = None
) -> Dict[str, Any]:
    """Overlay ``<prefix><KEY>`` environment variables onto config keys.

    Reads a ``.env`` file first (python-dotenv; existing variables win).
    Values are parsed as YAML, so ``SMOOTHER_ORDER=3`` gives the integer 3
    and ``SMOOTHER_SIGMAS=[0.1, 0.2]`` a list.

    Args:
        config: Configuration to overlay; left unchanged.
        prefix: Environment variable prefix.
        dotenv_path: Optional explicit .env path.

    Returns:
        New dictionary with overrides applied.

    Example:
        >>> os.environ["SMOOTHER_ORDER"] = "3"
        >>> apply_env_overrides({"ORDER": 2})["ORDER"]
        3
    """
    load_dotenv(dotenv_path=dotenv_path, override=False)
    merged = dict(config)
    for name, raw in os.environ.items():
        if not name.startswith(prefix) or name == f"{prefix}LOG_LEVEL":
            continue
        key = name[len(prefix):]
        try:
            merged[key] = yaml.safe_load(raw)
        except yaml.YAMLError:
            merged[key] = raw
    return merged


def get_config_value(config: Dict[str, Any], key: str, default: Optional[Any] = None) -> Any:
    """Safely retrieve a configuration value with optional default.

    Args:
        config: Configuration dictionary.
        key: Configuration key to retrieve.
        default: Default value to return if key is not found. Defaults to None.

    Returns:
        Configuration value for the key, or default if key not found.
    """
    return config.get(key, default)
