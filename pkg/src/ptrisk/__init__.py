"""Pre-test risk stratification benchmark toolkit."""

__version__ = "0.1.0"
