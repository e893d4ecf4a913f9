"""Activity prediction for antibody-drug conjugates."""

__version__ = "0.1.0"
