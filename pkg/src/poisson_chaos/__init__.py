"""Chaos decompositions on Poisson, compound-Poisson and Gamma noise spaces, with numerical verification suites."""
from .errors import DIVERGES, AtomClash, AtomMissing, ConfigError, DomainError, SizeError
from .window import Window
from .functions import Bump, Indicator, Polynomial, TestFunction, constant, coordinate, poly
from .measures import FiniteDiscrete, GammaLevy, IntensityMeasure, laplace, perturb_sigma
from .configuration import Configuration, DiscreteMeasure, MarkedConfiguration, sigma_inverse, sigma_map

__version__ = "0.1.0"

__all__ = [
    "DIVERGES", "AtomClash", "AtomMissing", "ConfigError", "DomainError", "SizeError",
    "Window", "Bump", "Indicator", "Polynomial", "TestFunction", "constant", "coordinate", "poly",
    "FiniteDiscrete", "GammaLevy", "IntensityMeasure", "laplace", "perturb_sigma",
    "Configuration", "DiscreteMeasure", "MarkedConfiguration", "sigma_inverse", "sigma_map",
]
