class ConfigError(ValueError):
    """Rejected build-time configuration (bad rates, ranges, or keys)."""


class ScoreError(ValueError):
    """Malformed score text; carries the offending line number in args."""
