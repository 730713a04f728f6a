"""Geometry of spacelike surfaces in H^2 x R_1 with numerical identity checks."""

from ._version import __version__
from .ambient import DISK, POLAR, HyperbolicChart
from .deform import DeformationContext
from .surface import Grid, SurfacePatch, frame_at

__all__ = ["__version__", "DISK", "POLAR", "HyperbolicChart", "DeformationContext", "Grid", "SurfacePatch", "frame_at"]
