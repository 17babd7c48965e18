"""Design and noise-budget engine for a superfluid helium Josephson gyrometer."""

__version__ = "0.1.0"
