"""CORnet-S circuits and a Brain-Score style benchmark suite on numpy."""

__version__ = "0.1.0"
