"""Information-bounded feature learning for generalized zero-shot recognition."""

__version__ = "0.1.0"
