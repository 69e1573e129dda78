"""Time-of-arrival eigenstates and the arrival-time POVM for free motion."""
__version__ = "0.1.0"
