"""Pixel-level primitives shared by the metric modules.

Decoding, bounding-box crops with square expansion, bilinear resize,
grayscale conversion, HSI hue extraction, and seeded patch sampling.
All operations are pure and safe to run data-parallel over images.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


@dataclass(frozen=True)
class Image:
    """8-bit image, RGB (h, w, 3) or single-channel grayscale (h, w)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {px.dtype}")
        if px.ndim == 3 and px.shape[2] != 3:
            raise ValueError(f"expected 3 channels, got shape {px.shape}")
        if px.ndim not in (2, 3):
            raise ValueError(f"expected 2-D or 3-D pixel array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def is_gray(self) -> bool:
        return self.pixels.ndim == 2


@dataclass(frozen=True)
class Patch:
    """Square grayscale patch cut from a source image."""

    origin: tuple[int, int]  # (x, y) in the source image
    pixels: np.ndarray  # (side, side) uint8

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise ValueError(f"patch must be square, got shape {self.pixels.shape}")
        if self.side < 2:
            raise ValueError("patch side must be >= 2")

    @property
    def side(self) -> int:
        return self.pixels.shape[0]


def load_image(path: str | Path) -> Image:
    """Decode a PNG/JPEG file into an RGB Image."""
    with PILImage.open(path) as im:
        return Image(np.asarray(im.convert("RGB"), dtype=np.uint8))


def resize_bilinear(pixels: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with half-pixel centers (src = (dst+0.5)*scale - 0.5)."""
    in_h, in_w = pixels.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return pixels.copy()
    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    ys = np.clip(ys, 0.0, in_h - 1.0)
    xs = np.clip(xs, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if pixels.ndim == 3:
        wy = wy[..., None]
        wx = wx[..., None]
    src = pixels.astype(np.float64)
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bot = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    out = top * (1 - wy) + bot * wy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def crop_resize(
    image: Image,
    bbox: tuple[float, float, float, float],
    out_side: int = 256,
) -> Image:
    """Square-expand a bbox about its center, crop, and resample to out_side.

    The square side is max(w, h); it is shifted to stay inside the image
    where possible, then clipped to the image bounds. Raises ValueError if
    the bbox does not intersect the image at all.
    """
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        raise ValueError(f"bbox has non-positive size: {bbox}")
    if x + w <= 0 or y + h <= 0 or x >= image.width or y >= image.height:
        raise ValueError(f"bbox {bbox} does not intersect image "
                         f"{image.width}x{image.height}")
    side = max(w, h)
    cx, cy = x + w / 2.0, y + h / 2.0
    x0 = cx - side / 2.0
    y0 = cy - side / 2.0
    # Shift the square into bounds, then clip what still overhangs.
    x0 = min(max(x0, 0.0), max(image.width - side, 0.0))
    y0 = min(max(y0, 0.0), max(image.height - side, 0.0))
    ix0 = int(math.floor(x0))
    iy0 = int(math.floor(y0))
    ix1 = min(int(math.ceil(x0 + side)), image.width)
    iy1 = min(int(math.ceil(y0 + side)), image.height)
    crop = image.pixels[iy0:iy1, ix0:ix1]
    return Image(resize_bilinear(crop, out_side, out_side))


def to_grayscale(image: Image) -> Image:
    """ITU-R 601 luma: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255]."""
    if image.is_gray:
        return Image(image.pixels.copy())
    rgb = image.pixels.astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return Image(np.clip(np.rint(luma), 0, 255).astype(np.uint8))


# Pixels with channel spread below this are treated as achromatic: their
# hue is numerically meaningless at the 8-bit noise floor.
ACHROMATIC_SPREAD = 3


def hue_hsi(r: int, g: int, b: int) -> float | None:
    """HSI hue angle in [0, 360), or None for near-achromatic pixels."""
    if max(r, g, b) - min(r, g, b) < ACHROMATIC_SPREAD:
        return None
    num = 0.5 * ((r - g) + (r - b))
    den = math.sqrt((r - g) ** 2 + (r - b) * (g - b))
    theta = math.degrees(math.acos(max(-1.0, min(1.0, num / den))))
    h = theta if b <= g else 360.0 - theta
    return h % 360.0


def hue_image(image: Image) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized HSI hue over an RGB image.

    Returns (hues_degrees, chromatic_mask); hue values where the mask is
    False are undefined and must be ignored.
    """
    if image.is_gray:
        raise ValueError("hue requires an RGB image")
    rgb = image.pixels.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    spread = rgb.max(axis=-1) - rgb.min(axis=-1)
    mask = spread >= ACHROMATIC_SPREAD
    num = 0.5 * ((r - g) + (r - b))
    den = np.sqrt((r - g) ** 2 + (r - b) * (g - b))
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.degrees(np.arccos(np.clip(num / den, -1.0, 1.0)))
    hues = np.where(b <= g, theta, 360.0 - theta) % 360.0
    hues[~mask] = 0.0
    return hues, mask


def extract_patches(
    image: Image,
    side: int,
    count: int,
    seed: int,
) -> list[Patch]:
    """Sample `count` square patches at seeded-uniform positions.

    Patches are non-overlapping when rejection sampling finds room;
    otherwise overlap is allowed and a warning is emitted.
    """
    if not image.is_gray:
        raise ValueError("patch extraction requires a grayscale image")
    if image.width < side or image.height < side:
        raise ValueError(
            f"image {image.width}x{image.height} smaller than patch side {side}")
    rng = np.random.default_rng(seed)
    max_x = image.width - side
    max_y = image.height - side
    origins: list[tuple[int, int]] = []
    attempts = 0
    overlap_allowed = False
    while len(origins) < count:
        x = int(rng.integers(0, max_x + 1))
        y = int(rng.integers(0, max_y + 1))
        attempts += 1
        collides = any(abs(x - ox) < side and abs(y - oy) < side
                       for ox, oy in origins)
        if collides and not overlap_allowed:
            if attempts > 200 * count:
                overlap_allowed = True
                warnings.warn(
                    f"cannot place {count} non-overlapping {side}x{side} patches "
                    f"in a {image.width}x{image.height} image; allowing overlap",
                    stacklevel=2,
                )
            continue
        origins.append((x, y))
    return [
        Patch(origin=(x, y), pixels=image.pixels[y:y + side, x:x + side].copy())
        for x, y in origins
    ]


def load_patch_list(path: str | Path) -> dict[str, list[tuple[int, int, int]]]:
    """Read a manual patch-override CSV with columns image_id,x,y,side."""
    out: dict[str, list[tuple[int, int, int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"image_id", "x", "y", "side"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"patch list {path} must have columns {sorted(required)}")
        for row in reader:
            out.setdefault(row["image_id"], []).append(
                (int(row["x"]), int(row["y"]), int(row["side"])))
    return out


def patches_from_list(image: Image, entries: list[tuple[int, int, int]]) -> list[Patch]:
    """Cut patches at explicit (x, y, side) positions from a manual list."""
    patches = []
    for x, y, side in entries:
        if x < 0 or y < 0 or x + side > image.width or y + side > image.height:
            raise ValueError(f"patch ({x},{y},{side}) outside "
                             f"{image.width}x{image.height} image")
        patches.append(Patch(origin=(x, y), pixels=image.pixels[y:y + side, x:x + side].copy()))
    return patches
