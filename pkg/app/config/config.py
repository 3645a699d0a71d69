"""
Configuration management for the workbench.
Handles runtime knobs from environment variables and the .env file.
"""

import os
import logging
from typing import Dict, Any
from dotenv import load_dotenv

logger = logging.getLogger(__name__)


class Config:
    """Configuration manager for runtime settings."""

    def __init__(self):
        """Initialize configuration manager."""
        load_dotenv()
        logger.debug("Configuration loaded from environment variables")

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value from environment variables.

        Args:
            key: Environment variable name
            default: Default value if key not found

        Returns:
            Configuration value
        """
        return os.getenv(key, default)

    def get_runtime_config(self) -> Dict[str, Any]:
        """Get runtime configuration (logging, worker pool, output root)."""
        threads_raw = self.get('LOADID_THREADS', '1')
        try:
            threads = max(1, int(threads_raw))
        except ValueError:
            logger.warning(f"Ignoring non-integer LOADID_THREADS={threads_raw!r}, using 1")
            threads = 1

        return {
            'log_level': self.get('LOADID_LOG_LEVEL', 'INFO'),
            'log_file': self.get('LOADID_LOG_FILE'),
            'threads': threads,
            'output_dir': self.get('LOADID_OUTPUT_DIR', 'runs'),
        }

    def validate_config(self) -> bool:
        """Validate that runtime configuration values are usable."""
        runtime = self.get_runtime_config()
        if runtime['log_level'].upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            logger.error(f"Invalid LOADID_LOG_LEVEL: {runtime['log_level']}")
            return False

        logger.debug("Configuration validation passed")
        return True


# Global configuration instance
config = Config()
