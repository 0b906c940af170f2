"""Exception types shared across the package."""


class CrowdsenseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CrowdsenseError):
    """Invalid configuration. Carries the full list of violations."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ShapeError(CrowdsenseError):
    """Array dimensions do not match what the operation requires."""


class EffortBoundsError(CrowdsenseError):
    """An effort level lies outside [0, effort_cap]."""


class EpisodeCompleteError(CrowdsenseError):
    """step() was called on an episode that already reached its horizon."""


class EmptyBufferError(CrowdsenseError):
    """sample() was called on a replay buffer with no records."""
