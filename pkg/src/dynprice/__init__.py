"""Dynamic posted prices that steer selfish agents into emulating online algorithms."""

__version__ = "0.1.0"
