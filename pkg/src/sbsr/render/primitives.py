"""Procedural primitive meshes (consistent outward winding, +Y up).

These drive the desk-scale end-to-end pipeline and the render tests; each
builder returns a mesh already normalized to the unit cube.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, normalize_mesh


def _mesh(vertices, faces) -> Mesh:
    return normalize_mesh(
        Mesh(
            vertices=np.asarray(vertices, dtype=np.float64),
            faces=np.asarray(faces, dtype=np.int64),
        )
    )


def cube() -> Mesh:
    v = np.array(
        [
            [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
            [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
        ],
        dtype=np.float64,
    )
    quads = [
        (4, 5, 6, 7),  # +z
        (1, 0, 3, 2),  # -z
        (5, 1, 2, 6),  # +x
        (0, 4, 7, 3),  # -x
        (7, 6, 2, 3),  # +y
        (0, 1, 5, 4),  # -y
    ]
    faces = []
    for a, b, c, d in quads:
        faces.append((a, b, c))
        faces.append((a, c, d))
    return _mesh(v, faces)


def icosphere(subdivisions: int = 3) -> Mesh:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.asarray(v, dtype=np.float64) for v in verts]
    verts = [v / np.linalg.norm(v) for v in verts]

    midpoint_cache: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        idx = midpoint_cache.get(key)
        if idx is None:
            m = verts[a] + verts[b]
            m = m / np.linalg.norm(m)
            verts.append(m)
            idx = len(verts) - 1
            midpoint_cache[key] = idx
        return idx

    for _ in range(subdivisions):
        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces
    return _mesh(np.vstack(verts), faces)


def cylinder(segments: int = 24) -> Mesh:
    angles = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    bottom = np.column_stack([np.cos(angles), np.full(segments, -1.0), np.sin(angles)])
    top = np.column_stack([np.cos(angles), np.full(segments, 1.0), np.sin(angles)])
    verts = np.vstack([bottom, top, [[0.0, -1.0, 0.0]], [[0.0, 1.0, 0.0]]])
    bc = 2 * segments  # bottom center
    tc = 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        # side quad; ring runs clockwise when seen from +y, so this winds outward
        faces.append((i, i + segments, j + segments))
        faces.append((i, j + segments, j))
        faces.append((bc, i, j))  # bottom cap faces -y
        faces.append((tc, j + segments, i + segments))  # top cap faces +y
    return _mesh(verts, faces)


def cone(segments: int = 24) -> Mesh:
    angles = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    base = np.column_stack([np.cos(angles), np.full(segments, -1.0), np.sin(angles)])
    verts = np.vstack([base, [[0.0, 1.0, 0.0]], [[0.0, -1.0, 0.0]]])
    apex = segments
    bc = segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces.append((apex, j, i))
        faces.append((bc, i, j))
    return _mesh(verts, faces)


def torus(major_segments: int = 32, minor_segments: int = 16, minor_radius: float = 0.4) -> Mesh:
    verts = []
    for i in range(major_segments):
        u = 2.0 * np.pi * i / major_segments
        cu, su = np.cos(u), np.sin(u)
        for j in range(minor_segments):
            v = 2.0 * np.pi * j / minor_segments
            r = 1.0 + minor_radius * np.cos(v)
            verts.append((r * cu, minor_radius * np.sin(v), r * su))
    faces = []
    for i in range(major_segments):
        i2 = (i + 1) % major_segments
        for j in range(minor_segments):
            j2 = (j + 1) % minor_segments
            a = i * minor_segments + j
            b = i2 * minor_segments + j
            c = i2 * minor_segments + j2
            d = i * minor_segments + j2
            faces.append((a, d, c))
            faces.append((a, c, b))
    return _mesh(verts, faces)


PRIMITIVES = {
    "cube": cube,
    "icosphere": icosphere,
    "cylinder": cylinder,
    "cone": cone,
    "torus": torus,
}


def primitive_mesh(name: str) -> Mesh:
    try:
        return PRIMITIVES[name]()
    except KeyError:
        raise ValueError(f"unknown primitive {name!r}; have {sorted(PRIMITIVES)}") from None
