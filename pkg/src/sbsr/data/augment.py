"""Sketch augmentation: small random affine warps.

Each augmentation draws a rotation in [-10, +10] degrees, an isotropic scale
in [0.9, 1.1] and a per-axis translation in [-5, +5] px, applied about the
image center with bilinear sampling and background fill. The ranges are small
enough to keep warped strokes inside the preprocessing margin.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .images import affine_warp, load_image, save_pgm
from .manifest import DatasetManifest, ManifestEntry

ROTATION_DEG = 10.0
SCALE_LOW, SCALE_HIGH = 0.9, 1.1
TRANSLATE_PX = 5.0


def _affine_about_center(
    shape: tuple[int, int], rotation_deg: float, scale: float, translate: tuple[float, float]
) -> np.ndarray:
    h, w = shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    theta = np.deg2rad(rotation_deg)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    rs = scale * np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    tx = translate[0] + cx - rs[0, 0] * cx - rs[0, 1] * cy
    ty = translate[1] + cy - rs[1, 0] * cx - rs[1, 1] * cy
    return np.array([[rs[0, 0], rs[0, 1], tx], [rs[1, 0], rs[1, 1], ty], [0.0, 0.0, 1.0]])


def augment_sketch(
    img: np.ndarray,
    rng: np.random.Generator,
    rotation_deg: float | None = None,
    scale: float | None = None,
    translate: tuple[float, float] | None = None,
) -> np.ndarray:
    """One randomly warped copy of a sketch; explicit parameters override the
    random draws (the draws still consume the rng in a fixed order)."""
    drawn_rot = rng.uniform(-ROTATION_DEG, ROTATION_DEG)
    drawn_scale = rng.uniform(SCALE_LOW, SCALE_HIGH)
    drawn_tx = rng.uniform(-TRANSLATE_PX, TRANSLATE_PX)
    drawn_ty = rng.uniform(-TRANSLATE_PX, TRANSLATE_PX)
    matrix = _affine_about_center(
        img.shape,
        drawn_rot if rotation_deg is None else rotation_deg,
        drawn_scale if scale is None else scale,
        (drawn_tx, drawn_ty) if translate is None else translate,
    )
    return affine_warp(img, matrix)


def materialize_augmentations(
    manifest: DatasetManifest, rng: np.random.Generator, copies: int = 2
) -> list[ManifestEntry]:
    """Write `copies` augmented files per sketch beside the originals
    (suffix _aug1, _aug2, ...) and return their manifest entries."""
    new_entries: list[ManifestEntry] = []
    for entry in manifest.sketches():
        src = manifest.resolve_path(entry)
        img = load_image(src)
        for i in range(1, copies + 1):
            warped = augment_sketch(img, rng)
            out_path = src.with_name(f"{src.stem}_aug{i}.pgm")
            save_pgm(out_path, warped)
            rel = Path(entry.image_path).with_name(out_path.name)
            new_entries.append(
                ManifestEntry(
                    id=f"{entry.id}_aug{i}",
                    class_label=entry.class_label,
                    domain="sketch",
                    image_path=str(rel),
                )
            )
    return new_entries
