"""Moran model with interactive neutral reproduction and FTW selection.

Modules: ``combinatorics`` (exact selection coefficients), ``model``
(parameters, events, forward chain), ``cylinders`` (cylinder calculus),
``ancestry`` (AIGs and the configuration process), ``frankenstein``
(matching, Frankenstein and messy processes), ``duality`` (verification
of the dualities), ``fixtures`` and ``cli``.
"""
from .combinatorics import SelectionRates
from .cylinders import Cylinder
from .model import EventStream, ModelParams
from .permutation import Permutation

__version__ = "1.0.0"

__all__ = ["Cylinder", "EventStream", "ModelParams", "Permutation", "SelectionRates", "__version__"]
