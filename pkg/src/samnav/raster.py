"""Raster map ingestion and patch cropping.

A raster is an H x W x 3 float array with values in [0, 1] plus a physical
scale. Bright pixels (> 0.5 mean brightness) are traversable free space,
dark pixels are walls; out-of-bounds regions behave like walls (zero).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import FormatError

FREE_THRESHOLD = 0.5


@dataclass
class RasterMap:
    pixels: np.ndarray  # (height, width, 3) float64 in [0, 1]
    metres_per_pixel: float = 0.25

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim == 2:
            self.pixels = np.repeat(self.pixels[:, :, None], 3, axis=2)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise FormatError("raster must have shape (H, W, 3)")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise FormatError("raster must be at least 1x1")
        if not np.all(np.isfinite(self.pixels)):
            raise FormatError("raster contains non-finite values")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise FormatError("raster values must lie in [0, 1]")
        if not self.metres_per_pixel > 0:
            raise FormatError("metres_per_pixel must be positive")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def brightness(self) -> np.ndarray:
        return self.pixels.mean(axis=2)

    def free_mask(self) -> np.ndarray:
        return self.brightness() > FREE_THRESHOLD

    def in_bounds(self, x: float, y: float) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


@dataclass
class Patch:
    centre: tuple[int, int]  # (x, y) in the source raster
    side: int
    pixels: np.ndarray = field(repr=False)  # (side, side, 3), zero-padded


def load_raster(path, metres_per_pixel: float = 0.25) -> RasterMap:
    """Read an 8-bit PNG or PGM; grayscale is replicated across channels."""
    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise FormatError(f"unreadable image {path}: {exc}") from exc
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise FormatError(f"unsupported bit depth in {path} (only 8-bit supported)")
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.float64) / 255.0
    return RasterMap(arr, metres_per_pixel=metres_per_pixel)


def raster_png_bytes(raster: RasterMap) -> bytes:
    data = np.clip(np.round(raster.pixels * 255.0), 0, 255).astype(np.uint8)
    img = Image.fromarray(data, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def save_raster(raster: RasterMap, path) -> None:
    """Write as 8-bit PNG or PGM by file extension; exact round trip for
    8-bit-quantised pixel values."""
    path = str(path)
    data = np.clip(np.round(raster.pixels * 255.0), 0, 255).astype(np.uint8)
    if path.endswith(".pgm"):
        img = Image.fromarray(data.mean(axis=2).round().astype(np.uint8), mode="L")
    else:
        img = Image.fromarray(data, mode="RGB")
    img.save(path)


def crop_patch(raster: RasterMap, centre: tuple[int, int], side: int) -> Patch:
    """Square crop centred on ``centre``; out-of-bounds pixels are zero (wall)."""
    if side < 1 or side % 2 == 0:
        raise FormatError(f"patch side must be odd and >= 1, got {side}")
    cx, cy = int(centre[0]), int(centre[1])
    half = side // 2
    out = np.zeros((side, side, 3), dtype=np.float64)
    y0, y1 = cy - half, cy + half + 1
    x0, x1 = cx - half, cx + half + 1
    sy0, sy1 = max(y0, 0), min(y1, raster.height)
    sx0, sx1 = max(x0, 0), min(x1, raster.width)
    if sy0 < sy1 and sx0 < sx1:
        out[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = raster.pixels[sy0:sy1, sx0:sx1]
    return Patch((cx, cy), side, out)
