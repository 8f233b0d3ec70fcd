"""Triangle-mesh ingestion and line-drawing renders of 3D models.

A model is drawn from two dataset-wide random viewpoints as a 1-px binary
line image: silhouette edges, open boundaries, and sharp creases, with hidden
lines removed against a face-rasterized depth buffer.
"""

from .mesh import Mesh, MeshError, load_obj, normalize_mesh
from .viewpoints import (
    Viewpoint,
    ViewPairConfig,
    ELEVATION_BAND,
    MIN_SEPARATION_DEG,
    pick_viewpoints,
    separation_deg,
    view_direction,
)
from .lines import project, render_lines
from .primitives import cube, icosphere, cylinder, cone, torus, primitive_mesh, PRIMITIVES

__all__ = [
    "Mesh",
    "MeshError",
    "load_obj",
    "normalize_mesh",
    "Viewpoint",
    "ViewPairConfig",
    "ELEVATION_BAND",
    "MIN_SEPARATION_DEG",
    "pick_viewpoints",
    "separation_deg",
    "view_direction",
    "project",
    "render_lines",
    "cube",
    "icosphere",
    "cylinder",
    "cone",
    "torus",
    "primitive_mesh",
    "PRIMITIVES",
]
