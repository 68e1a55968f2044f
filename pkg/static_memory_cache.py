"""
Static memory cache for operadia configuration.

The configuration is read once from ``config.json`` next to this file and kept
in class attributes; a few keys can be overridden through environment variables.
"""

import json
import os
from typing import Any, Dict, Tuple


class StaticMemoryCache:
    """Process-wide configuration store."""

    config: Dict[str, Any] = {}
    _initialized: bool = False

    @classmethod
    def initialize(cls, config_file: str = "config.json"):
        """Load config into memory on first use."""
        if cls._initialized:
            return

        config_path = os.path.join(os.path.dirname(__file__), config_file)
        try:
            with open(config_path, "r") as f:
                cls.config = json.load(f)
        except FileNotFoundError:
            cls.config = {}
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in config file: {e}")
        cls._initialized = True

    @classmethod
    def get_config(cls, section: str, key: str, default=None):
        """Retrieve a configuration value."""
        if not cls._initialized:
            cls.initialize()
        return cls.config.get(section, {}).get(key, default)

    @classmethod
    def get_section(cls, section: str) -> Dict[str, Any]:
        """Retrieve an entire configuration section."""
        if not cls._initialized:
            cls.initialize()
        return cls.config.get(section, {})

    @classmethod
    def get_max_cells(cls) -> int:
        """Cap on the total number of basis cells a truncation may produce."""
        env_value = os.getenv("OPERADIA_MAX_CELLS")
        if env_value:
            return int(env_value)
        return int(cls.get_config("limits", "max_cells", 1_000_000))

    @classmethod
    def get_default_truncation(cls) -> Tuple[int, int, Tuple[int, int]]:
        """Default (max_arity, max_weight, degree_window)."""
        section = cls.get_section("truncation")
        window = section.get("degree_window", [-64, 64])
        return (
            int(section.get("max_arity", 4)),
            int(section.get("max_weight", 4)),
            (int(window[0]), int(window[1])),
        )


StaticMemoryCache.initialize()
