"""Process settings read from the environment."""

import os

from app.common.errors import ConfigError

THREADS_SETTING = "LTTD_THREADS"
LOG_LEVEL_SETTING = "LOG_LEVEL"
DEFAULT_LOG_LEVEL = "WARNING"


def get_setting(name: str, default: str | None = None) -> str | None:
    """Retrieves a setting value from the process environment.

    Empty values are treated as unset.

    Args:
        name: The name of the setting to retrieve.
        default: Value returned when the setting is absent.

    Returns:
        The setting value as a string, or the default.
    """
    setting_value = os.environ.get(name)
    if setting_value is None or not setting_value.strip():
        return default
    return setting_value.strip()


def resolve_threads(cli_value: int | None) -> int:
    """Resolve the worker-thread count; LTTD_THREADS overrides the flag.

    Args:
        cli_value: Value given with --threads, if any

    Returns:
        Number of worker threads (>= 1)

    Raises:
        ConfigError: If the resolved value is not a positive integer
    """
    env_value = get_setting(THREADS_SETTING)
    if env_value is not None:
        try:
            threads = int(env_value)
        except ValueError as parse_error:
            raise ConfigError(
                f"{THREADS_SETTING} must be an integer, got {env_value!r}",
                {"setting": THREADS_SETTING},
            ) from parse_error
    else:
        threads = 1 if cli_value is None else cli_value
    if threads < 1:
        raise ConfigError("Thread count must be >= 1", {"threads": threads})
    return threads


def log_level() -> str:
    """Return the configured log level name."""
    return (get_setting(LOG_LEVEL_SETTING, DEFAULT_LOG_LEVEL) or DEFAULT_LOG_LEVEL).upper()
