"""Atomic units: hbar = 1, h = 2*pi."""
import math

HBAR = 1.0
H = 2.0 * math.pi
