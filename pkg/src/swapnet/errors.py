"""Exception types shared across the package."""

from __future__ import annotations


class SwapnetError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SwapnetError, ValueError):
    """A run configuration is malformed or inconsistent."""


class SizeLimitError(SwapnetError):
    """A requested register exceeds the dense-simulation ceiling."""


class InvariantError(SwapnetError):
    """A numerical invariant (norm, unitarity, totality) was violated."""


class ImpossibleOutcomeError(InvariantError):
    """A measurement outcome with probability below the floor was forced."""
