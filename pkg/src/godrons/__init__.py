"""Tangential singularities of polynomial surface graphs z = f(x, y)."""

from .errors import GodronError
from .surface import AffineChart, Jet, PlanarCurve, PolySurface, SpaceCurve, adapted_chart, eval_jet, parse_surface

__all__ = [
    "AffineChart",
    "GodronError",
    "Jet",
    "PlanarCurve",
    "PolySurface",
    "SpaceCurve",
    "adapted_chart",
    "eval_jet",
    "parse_surface",
]

__version__ = "0.1.0"
