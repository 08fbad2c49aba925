"""Adaptive random testing toolkit."""

from .core import GenerationBudgetExceeded, Generator, InputDomain, RandomTesting, rng_stream

__version__ = "0.1.0"

__all__ = ["GenerationBudgetExceeded", "Generator", "InputDomain", "RandomTesting", "rng_stream", "__version__"]
