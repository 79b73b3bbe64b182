"""Trust-aware multi-objective nitrogen management on a surrogate crop model."""

__version__ = "0.1.0"
