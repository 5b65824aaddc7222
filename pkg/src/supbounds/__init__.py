"""Lower bounds for Gaussian suprema tails, Brownian boundary crossings and Pickands-constant parameter optimisation."""

__version__ = "0.1.0"
