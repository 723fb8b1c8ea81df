"""Tail probabilities of sums of light-tailed (Weibull-type) random variables."""

__version__ = "0.1.0"
