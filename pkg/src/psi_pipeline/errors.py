"""Shared exception hierarchy.

Every library error derives from PipelineError so the CLI can map
configuration/IO problems to exit code 2 without enumerating modules.
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid or incomplete pipeline configuration."""
