"""Orthographic line rendering with hidden-line removal.

Drawn edges are the union of silhouette edges (adjacent faces straddle
front/back facing), open boundary edges (one incident face), and crease edges
(dihedral step above 40 degrees). Visibility is resolved against a depth
buffer rasterized from the faces. Faces are pushed back by a slope-scaled
polygon offset when entering the buffer so that an edge lying on a grazing
face is not occluded by its own face; the edge-versus-buffer comparison then
uses the plain 1e-3 tolerance (in units of the normalized mesh).
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh
from .viewpoints import Viewpoint, view_direction

CREASE_ANGLE_DEG = 40.0
DEPTH_EPSILON = 1e-3
CANVAS = 100
ACTIVE = 90
_EDGE_STEP_PX = 0.5


def project(mesh: Mesh, viewpoint: Viewpoint, size: int = CANVAS, active: int = ACTIVE) -> np.ndarray:
    """Project vertices orthographically; returns [n, 3] of (px, py, depth).

    The camera looks at the origin; +Y is up. Screen coordinates are scaled
    uniformly about the origin so the projection fits the central active
    square, which keeps the view axis on the canvas center. Depth grows away
    from the camera.
    """
    toward_camera = view_direction(viewpoint)
    forward = -toward_camera
    world_up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, world_up)
    norm = np.linalg.norm(right)
    if norm < 1e-12:  # looking straight up/down; elevation band avoids this
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / norm
    up = np.cross(right, forward)

    v = mesh.vertices
    x = v @ right
    y = v @ up
    depth = v @ forward
    half_extent = max(float(np.abs(x).max()), float(np.abs(y).max()), 1e-9)
    s = (active / 2.0) / half_extent
    c = (size - 1) / 2.0
    return np.column_stack([c + s * x, c - s * y, depth])


def _edge_faces(faces: np.ndarray) -> dict[tuple[int, int], list[int]]:
    edges: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edges.setdefault(key, []).append(fi)
    return edges


def _rasterize_depth(proj: np.ndarray, faces: np.ndarray, size: int) -> np.ndarray:
    """Min-depth buffer over faces, with slope-proportional polygon offset."""
    zbuf = np.full((size, size), np.inf)
    px = proj[:, 0]
    py = proj[:, 1]
    pz = proj[:, 2]
    for a, b, c in faces:
        x0, x1, x2 = px[a], px[b], px[c]
        y0, y1, y2 = py[a], py[b], py[c]
        z0, z1, z2 = pz[a], pz[b], pz[c]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area) < 1e-9:  # edge-on in screen space; nothing to fill
            continue
        lo_x = max(int(np.ceil(min(x0, x1, x2))), 0)
        hi_x = min(int(np.floor(max(x0, x1, x2))), size - 1)
        lo_y = max(int(np.ceil(min(y0, y1, y2))), 0)
        hi_y = min(int(np.floor(max(y0, y1, y2))), size - 1)
        if lo_x > hi_x or lo_y > hi_y:
            continue
        ys, xs = np.mgrid[lo_y : hi_y + 1, lo_x : hi_x + 1]
        w0 = (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1)
        w1 = (x0 - x2) * (ys - y2) - (y0 - y2) * (xs - x2)
        w2 = (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0)
        if area > 0:
            inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        else:
            inside = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
        if not inside.any():
            continue
        z = (w0 * z0 + w1 * z1 + w2 * z2) / area
        # Depth-plane gradient per pixel: the polygon offset that keeps a
        # grazing face from occluding the edges that lie on it.
        dzdx = ((y1 - y2) * z0 + (y2 - y0) * z1 + (y0 - y1) * z2) / area
        dzdy = ((x2 - x1) * z0 + (x0 - x2) * z1 + (x1 - x0) * z2) / area
        offset = max(abs(dzdx), abs(dzdy))
        region = zbuf[lo_y : hi_y + 1, lo_x : hi_x + 1]
        np.minimum(region, np.where(inside, z + offset, np.inf), out=region)
    return zbuf


def _classify_edges(mesh: Mesh, viewpoint: Viewpoint) -> list[tuple[int, int]]:
    normals = mesh.face_normals()
    forward = -view_direction(viewpoint)
    front = normals @ forward < 0.0
    unit = normals / np.maximum(np.linalg.norm(normals, axis=1, keepdims=True), 1e-30)
    cos_crease = np.cos(np.deg2rad(CREASE_ANGLE_DEG))

    drawn: list[tuple[int, int]] = []
    for (u, v), incident in _edge_faces(mesh.faces).items():
        if len(incident) != 2:
            drawn.append((u, v))  # open boundary (or non-manifold): always draw
            continue
        fa, fb = incident
        if front[fa] != front[fb]:
            drawn.append((u, v))  # silhouette
            continue
        if float(unit[fa] @ unit[fb]) < cos_crease:
            drawn.append((u, v))  # crease
    return drawn


def _dilate_max(buf: np.ndarray) -> np.ndarray:
    """3x3 max filter: visibility is judged against the most permissive depth
    within one pixel, absorbing the rounding of edge samples to pixel centers."""
    out = buf.copy()
    h, w = buf.shape
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            src = buf[
                max(0, -dy) : h - max(0, dy),
                max(0, -dx) : w - max(0, dx),
            ]
            dst = out[
                max(0, dy) : h - max(0, -dy),
                max(0, dx) : w - max(0, -dx),
            ]
            np.maximum(dst, src, out=dst)
    return out


def render_lines(mesh: Mesh, viewpoint: Viewpoint, size: int = CANVAS) -> np.ndarray:
    """Render a binary [size, size] line image (ink = 1) of the mesh."""
    proj = project(mesh, viewpoint, size=size)
    zbuf = _dilate_max(_rasterize_depth(proj, mesh.faces, size))
    ink = np.zeros((size, size), dtype=np.float32)
    for u, v in _classify_edges(mesh, viewpoint):
        x0, y0, z0 = proj[u]
        x1, y1, z1 = proj[v]
        length = float(np.hypot(x1 - x0, y1 - y0))
        steps = max(2, int(np.ceil(length / _EDGE_STEP_PX)) + 1)
        t = np.linspace(0.0, 1.0, steps)
        xs = np.rint(x0 + t * (x1 - x0)).astype(np.int64)
        ys = np.rint(y0 + t * (y1 - y0)).astype(np.int64)
        zs = z0 + t * (z1 - z0)
        ok = (xs >= 0) & (xs < size) & (ys >= 0) & (ys < size)
        xs, ys, zs = xs[ok], ys[ok], zs[ok]
        visible = zs <= zbuf[ys, xs] + DEPTH_EPSILON
        ink[ys[visible], xs[visible]] = 1.0
    return ink
