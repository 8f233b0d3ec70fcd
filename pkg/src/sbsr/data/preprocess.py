"""Normalization of arbitrary ink images into the network's input tensor."""

from __future__ import annotations

import numpy as np

from .images import BlankImageError, affine_warp

CANVAS = 100
ACTIVE = 90  # ink bounding box is fitted into this central square


def ink_bbox(img: np.ndarray) -> tuple[int, int, int, int] | None:
    """(row0, row1, col0, col1) inclusive bounds of ink pixels, or None."""
    rows = np.flatnonzero(img.max(axis=1) > 0)
    cols = np.flatnonzero(img.max(axis=0) > 0)
    if rows.size == 0:
        return None
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def preprocess(img: np.ndarray) -> np.ndarray:
    """Scale the ink bounding box to fit the 90x90 active area, centered on a
    100x100 zero canvas, with bilinear resampling. Returns a [1,100,100]
    float32 tensor in [0, 1]. Blank images are rejected."""
    bbox = ink_bbox(img)
    if bbox is None:
        raise BlankImageError("image has no ink; nothing to preprocess")
    r0, r1, c0, c1 = bbox
    bh = r1 - r0 + 1
    bw = c1 - c0 + 1
    s = ACTIVE / max(bh, bw)
    # Map the bbox (as unit-square pixel extents) to a centered box.
    off_x = (CANVAS - s * bw) / 2.0
    off_y = (CANVAS - s * bh) / 2.0
    tx = off_x - 0.5 - s * (c0 - 0.5)
    ty = off_y - 0.5 - s * (r0 - 0.5)
    matrix = np.array([[s, 0.0, tx], [0.0, s, ty], [0.0, 0.0, 1.0]])
    canvas = affine_warp(img, matrix, out_shape=(CANVAS, CANVAS))
    return canvas[None].astype(np.float32)
