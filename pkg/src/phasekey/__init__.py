"""Phase-reciprocity key sharing: simulator and secrecy/reliability checks."""

__version__ = "0.1.0"
