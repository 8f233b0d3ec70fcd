"""Triangle meshes and the ASCII OBJ loader.

Only v/f records matter here; polygons are fan-triangulated. Loaded meshes
are normalized to the unit cube centered at the origin (uniform scale, +Y up),
which fixes the length scale all depth tolerances refer to.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class MeshError(ValueError):
    pass


@dataclass
class Mesh:
    vertices: np.ndarray  # [n, 3] float64
    faces: np.ndarray  # [m, 3] int64 vertex indices

    def validate(self) -> None:
        if self.faces.shape[0] < 1:
            raise MeshError("mesh has no faces")
        if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
            raise MeshError(
                f"face index out of range 0..{len(self.vertices) - 1}"
            )

    def face_normals(self) -> np.ndarray:
        """Unnormalized winding normals, one per face."""
        v = self.vertices
        f = self.faces
        return np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])


def drop_degenerate_faces(mesh: Mesh) -> Mesh:
    areas = np.linalg.norm(mesh.face_normals(), axis=1)
    keep = areas > 1e-14
    if not keep.all():
        log.warning("dropping %d zero-area face(s)", int((~keep).sum()))
        mesh = Mesh(vertices=mesh.vertices, faces=mesh.faces[keep])
    mesh.validate()
    return mesh


def normalize_mesh(mesh: Mesh) -> Mesh:
    """Uniformly rescale into the unit cube centered at the origin."""
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    extent = float((hi - lo).max())
    if extent <= 0:
        raise MeshError("mesh has zero extent")
    center = (lo + hi) / 2.0
    return Mesh(vertices=(mesh.vertices - center) / extent, faces=mesh.faces)


def _parse_face_vertex(token: str, n_vertices: int, lineno: int) -> int:
    ref = token.split("/")[0]
    try:
        idx = int(ref)
    except ValueError:
        raise MeshError(f"line {lineno}: bad face vertex {token!r}") from None
    if idx < 0:
        idx = n_vertices + 1 + idx  # OBJ relative indexing
    if not (1 <= idx <= n_vertices):
        raise MeshError(
            f"line {lineno}: vertex index {token!r} out of range 1..{n_vertices}"
        )
    return idx - 1


def load_obj(path: str | Path) -> Mesh:
    """Load an ASCII OBJ, fan-triangulating polygons, and normalize it."""
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}: line {lineno}: malformed vertex")
                vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
            elif parts[0] == "f":
                if len(parts) < 4:
                    raise MeshError(f"{path}: line {lineno}: face needs >= 3 vertices")
                try:
                    idx = [_parse_face_vertex(t, len(vertices), lineno) for t in parts[1:]]
                except MeshError as exc:
                    raise MeshError(f"{path}: {exc}") from None
                for i in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[i], idx[i + 1]))
    if not faces:
        raise MeshError(f"{path}: no faces found")
    mesh = Mesh(
        vertices=np.asarray(vertices, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int64),
    )
    mesh.validate()
    mesh = drop_degenerate_faces(mesh)
    return normalize_mesh(mesh)


def save_obj(path: str | Path, mesh: Mesh) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
