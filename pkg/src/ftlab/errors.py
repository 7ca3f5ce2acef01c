"""Shared exception types."""


class NumericalDegeneracyError(RuntimeError):
    """A state matrix lost a structural property it must keep (e.g. an
    adaptation-gain matrix lost positive definiteness, or the inertia matrix
    became singular).  Usually a symptom of a too-large step size or corrupted
    parameters rather than a programming error."""


class ConfigError(ValueError):
    """Malformed or out-of-range run configuration."""
