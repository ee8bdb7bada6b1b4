"""Reversible polar unwrapping of a pupil-concentric disc.

Row r (1-based) of the unwrapped image UI transcribes n_r = max(1, round(2*pi*r))
source pixels sampled around the ring of radius r, left-aligned and padded
with black. Every transcribed pixel keeps its source coordinate, so any UI
position can be traced back to the eye image. The rectangular image RUI
stretches each UI row to a common width by linear interpolation.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    DiscOutOfBounds,
    EmptyRow,
    InvalidPosition,
    InvalidWidth,
    RowCountMismatch,
    ZeroRadius,
)
from .raster_io import GrayImage

logger = logging.getLogger("fuzzquant.polar")

DEFAULT_RUI_WIDTH = 512


def ring_size(r: int) -> int:
    return max(1, int(round(2 * np.pi * r)))


@dataclass(frozen=True)
class PolarMap:
    center: tuple[int, int]
    radius: int
    dims: tuple[int, int]
    # samples per row, shape (R,)
    counts: np.ndarray
    # source coordinates, shape (R, W); -1 on padding
    xs: np.ndarray
    ys: np.ndarray

    @property
    def rows(self) -> int:
        return self.radius

    @property
    def width(self) -> int:
        return int(self.counts[-1])

    @property
    def valid_mask(self) -> np.ndarray:
        return np.arange(self.width)[None, :] < self.counts[:, None]


@dataclass(frozen=True)
class UnwrappedImage:
    pixels: np.ndarray
    valid_mask: np.ndarray

    @property
    def rows(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    def valid_counts(self) -> np.ndarray:
        return self.valid_mask.sum(axis=1)


@dataclass(frozen=True)
class RectUnwrapped:
    pixels: np.ndarray

    @property
    def rows(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


def largest_radius(center: tuple[int, int], dims: tuple[int, int]) -> int:
    """Radius of the largest disc around `center` whose sampled pixels stay inside the image."""
    cx, cy = center
    w, h = dims
    return int(min(cx, cy, w - 1 - cx, h - 1 - cy))


def build_polar_map(center: tuple[int, int], radius: int, image_dims: tuple[int, int]) -> PolarMap:
    cx, cy = int(center[0]), int(center[1])
    radius = int(radius)
    if radius < 1:
        raise ZeroRadius(f"unwrap radius must be at least 1, got {radius}")
    if radius > largest_radius((cx, cy), image_dims):
        raise DiscOutOfBounds(f"disc at ({cx}, {cy}) radius {radius} leaves the {image_dims[0]}x{image_dims[1]} image")

    counts = np.array([ring_size(r) for r in range(1, radius + 1)], dtype=np.int64)
    width = int(counts[-1])
    xs = np.full((radius, width), -1, dtype=np.int64)
    ys = np.full((radius, width), -1, dtype=np.int64)
    for r, n in enumerate(counts, start=1):
        theta = 2 * np.pi * np.arange(n) / n
        xs[r - 1, :n] = cx + np.rint(r * np.cos(theta)).astype(np.int64)
        ys[r - 1, :n] = cy + np.rint(r * np.sin(theta)).astype(np.int64)

    for array in (counts, xs, ys):
        array.setflags(write=False)
    return PolarMap(center=(cx, cy), radius=radius, dims=(int(image_dims[0]), int(image_dims[1])), counts=counts, xs=xs, ys=ys)


def unwrap(img: GrayImage, polar_map: PolarMap) -> UnwrappedImage:
    if img.dims != polar_map.dims:
        raise DimensionMismatch(f"map built for {polar_map.dims}, image is {img.dims}")
    valid = polar_map.valid_mask
    pixels = np.zeros(valid.shape, dtype=np.uint8)
    pixels[valid] = img.pixels[polar_map.ys[valid], polar_map.xs[valid]]
    return UnwrappedImage(pixels=pixels, valid_mask=valid)


def stretch_rows(ui: UnwrappedImage, w_out: int = DEFAULT_RUI_WIDTH) -> RectUnwrapped:
    if w_out < 2:
        raise InvalidWidth(f"RUI width must be at least 2, got {w_out}")
    counts = ui.valid_counts()
    out = np.empty((ui.rows, w_out), dtype=np.float64)
    positions = np.arange(w_out, dtype=np.float64)
    for i, n in enumerate(counts):
        if n == 0:
            raise EmptyRow(f"UI row {i + 1} has no valid pixels")
        row = ui.pixels[i][ui.valid_mask[i]].astype(np.float64)
        if n == 1:
            out[i] = row[0]
            continue
        out[i] = np.interp(positions * (n - 1) / (w_out - 1), np.arange(n), row)
    return RectUnwrapped(pixels=out)


def trace_back(polar_map: PolarMap, r: int, t: int) -> tuple[int, int]:
    """Source pixel (x, y) of UI row r (1-based), column t (0-based)."""
    if not 1 <= r <= polar_map.rows:
        raise InvalidPosition(f"row {r} outside 1..{polar_map.rows}")
    if not 0 <= t < polar_map.counts[r - 1]:
        raise InvalidPosition(f"column {t} is padding in row {r} ({polar_map.counts[r - 1]} samples)")
    return int(polar_map.xs[r - 1, t]), int(polar_map.ys[r - 1, t])


def ring_mask(polar_map: PolarMap, row_lo: int, row_hi: int) -> np.ndarray:
    """Source-image mask of every pixel transcribed into UI rows row_lo..row_hi."""
    if not 1 <= row_lo <= row_hi <= polar_map.rows:
        raise RowCountMismatch(f"row band {row_lo}..{row_hi} outside 1..{polar_map.rows}")
    w, h = polar_map.dims
    mask = np.zeros((h, w), dtype=bool)
    valid = polar_map.valid_mask[row_lo - 1 : row_hi]
    mask[polar_map.ys[row_lo - 1 : row_hi][valid], polar_map.xs[row_lo - 1 : row_hi][valid]] = True
    return mask


class PolarMapCache:
    """Builds each (center, radius, dims) geometry once and hands out the shared map."""

    def __init__(self, maxsize: Optional[int] = 256) -> None:
        self._maps: dict[tuple, PolarMap] = {}
        self._maxsize = maxsize
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._maps)

    def get(self, center: tuple[int, int], radius: int, image_dims: tuple[int, int]) -> PolarMap:
        key = (int(center[0]), int(center[1]), int(radius), int(image_dims[0]), int(image_dims[1]))
        with self._lock:
            cached = self._maps.get(key)
            if cached is not None:
                self.hits += 1
                return cached
        polar_map = build_polar_map(center, radius, image_dims)
        with self._lock:
            self.misses += 1
            if self._maxsize is not None and len(self._maps) >= self._maxsize:
                self._maps.pop(next(iter(self._maps)))
            self._maps[key] = polar_map
        logger.debug(f"Built polar map {key}")
        return polar_map
