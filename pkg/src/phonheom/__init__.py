"""Phonon-number hierarchy solver for a harmonic system in an oscillator bath."""

__version__ = "1.0.0"

__all__ = [
    "bath",
    "bessel",
    "cli",
    "hierarchy",
    "linalg",
    "observables",
    "oracle",
    "plotting",
    "propagator",
    "system",
]
