"""Stream runtime verification with multi-level monitors for an AEB system."""

__version__ = "0.1.0"
