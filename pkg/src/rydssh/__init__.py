"""Non-reciprocal SSH chains from dissipative Rydberg atom arrays."""
__version__ = "0.1.0"
