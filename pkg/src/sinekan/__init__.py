"""Sinusoidal Kolmogorov-Arnold models, constructive sine approximation, and benchmarks."""

__version__ = "0.1.0"
