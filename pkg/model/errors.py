""" Configuration errors shared by every configurable component """


class ConfigError(ValueError):
    """An experiment, cache, selector or engine parameter is invalid."""
