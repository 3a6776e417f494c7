"""Numerical toolkit for heat smoothing in Morrey, Lorentz and Morrey-type spaces."""

__version__ = "0.1.0"

from .errors import MorreyHeatError  # noqa: E402
from .scaling import INF, SpaceParams, admissibility_window, select_endpoints, smoothing_exponent  # noqa: E402

__all__ = [
    "__version__", "MorreyHeatError", "INF", "SpaceParams", "admissibility_window",
    "select_endpoints", "smoothing_exponent",
]
