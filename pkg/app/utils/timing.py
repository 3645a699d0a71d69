"""
Timestamp and wall-clock helpers for run manifests.
"""

import time
from datetime import datetime, timezone


def get_utc_now() -> datetime:
    """Get current datetime in UTC.

    Returns:
        Current timezone-aware datetime in UTC
    """
    return datetime.now(timezone.utc)


def get_utc_timestamp() -> str:
    """Get current timestamp string in UTC (ISO format).

    Returns:
        Current timestamp string in UTC
    """
    return get_utc_now().isoformat(timespec="seconds")


class Stopwatch:
    """Context manager measuring elapsed wall time in seconds."""

    def __init__(self):
        self.started = 0.0
        self.elapsed = 0.0

    def __enter__(self) -> "Stopwatch":
        self.started = time.perf_counter()
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed = time.perf_counter() - self.started
