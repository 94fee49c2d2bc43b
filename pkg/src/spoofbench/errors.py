"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised when a configuration value or file is invalid.

    The command line maps this to exit code 2.
    """
