"""Grayscale image I/O and warping.

In memory an image is a float32 [h, w] array in [0, 1] where 1 is ink and 0 is
blank background. On disk (PGM or PNG) images are stored the way people draw:
dark strokes on a light page. Loading normalizes polarity by inverting any
image whose mean exceeds 0.5 -- line drawings are sparse ink, so a bright page
means the ink is dark.
"""

from __future__ import annotations

import io
import logging
from pathlib import Path

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)


class ImageFormatError(ValueError):
    """Unsupported image file format or bit depth."""


class BlankImageError(ValueError):
    """Image contains no ink and cannot be queried or preprocessed."""


def _parse_pgm(data: bytes, path: str) -> np.ndarray:
    """Binary PGM (P5, maxval 255) to a uint8 [h, w] array."""
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (magic {magic!r})")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError:
        raise ImageFormatError(f"{path}: malformed PGM header") from None
    if maxval != 255:
        raise ImageFormatError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    pos += 1  # single whitespace after maxval
    raw = data[pos : pos + width * height]
    if len(raw) != width * height:
        raise ImageFormatError(f"{path}: truncated PGM pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width)


def _normalize_polarity(raw: np.ndarray, path: str) -> np.ndarray:
    img = raw.astype(np.float32) / 255.0
    if raw.max() == raw.min():
        if img.mean() <= 0.5:
            log.warning("%s: degenerate full-ink page, treating as blank", path)
        return np.zeros_like(img)
    if img.mean() > 0.5:
        img = 1.0 - img
    return img


def load_image(path: str | Path) -> np.ndarray:
    """Load a PGM (P5) or 8-bit grayscale PNG as an ink image in [0, 1]."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P5":
        raw = _parse_pgm(data, str(path))
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        with Image.open(io.BytesIO(data)) as pil:
            if pil.mode != "L":
                raise ImageFormatError(
                    f"{path}: PNG must be 8-bit grayscale, got mode {pil.mode!r}"
                )
            raw = np.asarray(pil, dtype=np.uint8)
    else:
        raise ImageFormatError(f"{path}: unsupported format (PGM P5 or PNG expected)")
    return _normalize_polarity(raw, str(path))


def _ink_to_page(ink: np.ndarray) -> np.ndarray:
    """Float ink image to uint8 dark-on-light page pixels."""
    scaled = np.clip(np.rint((1.0 - ink) * 255.0), 0, 255)
    return scaled.astype(np.uint8)


def save_pgm(path: str | Path, ink: np.ndarray) -> None:
    """Write an ink image as a binary PGM page (dark strokes, light paper)."""
    page = _ink_to_page(ink)
    h, w = page.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(page.tobytes())


def ink_to_png_bytes(ink: np.ndarray) -> bytes:
    """Encode an ink image as grayscale PNG bytes (dark strokes, light paper)."""
    buf = io.BytesIO()
    Image.fromarray(_ink_to_page(ink), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_ink(data: bytes) -> np.ndarray:
    """Decode grayscale PNG bytes into a polarity-normalized ink image."""
    with Image.open(io.BytesIO(data)) as pil:
        if pil.mode != "L":
            raise ImageFormatError(f"PNG must be 8-bit grayscale, got mode {pil.mode!r}")
        raw = np.asarray(pil, dtype=np.uint8)
    return _normalize_polarity(raw, "<png bytes>")


def affine_warp(img: np.ndarray, matrix: np.ndarray, out_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Warp an image by a forward affine map in (x=col, y=row) pixel coords.

    matrix is 3x3 (or 2x3) mapping source pixel centers to destination pixel
    centers. Sampling is bilinear by inverse mapping; pixels that fall outside
    the source are filled with background (0). An identity matrix reproduces
    the input exactly.
    """
    h, w = img.shape
    oh, ow = out_shape if out_shape is not None else (h, w)
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape == (2, 3):
        m = np.vstack([m, (0.0, 0.0, 1.0)])
    inv = np.linalg.inv(m)
    yy, xx = np.meshgrid(np.arange(oh), np.arange(ow), indexing="ij")
    sx = inv[0, 0] * xx + inv[0, 1] * yy + inv[0, 2]
    sy = inv[1, 0] * xx + inv[1, 1] * yy + inv[1, 2]
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    dx = sx - x0
    dy = sy - y0
    out = np.zeros((oh, ow), dtype=np.float64)
    for oy, ox, weight in (
        (0, 0, (1 - dy) * (1 - dx)),
        (0, 1, (1 - dy) * dx),
        (1, 0, dy * (1 - dx)),
        (1, 1, dy * dx),
    ):
        yi = y0 + oy
        xi = x0 + ox
        valid = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
        vals = img[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
        out += weight * np.where(valid, vals, 0.0)
    return np.clip(out, 0.0, 1.0).astype(np.float32)
