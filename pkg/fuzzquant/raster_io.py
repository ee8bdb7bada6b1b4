"""Grayscale rasters: PGM/PNG I/O and result overlays."""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterator, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CircleOutOfBounds, CorruptData, UnsupportedFormat

if TYPE_CHECKING:
    from .pupil import PupilCircle

logger = logging.getLogger("fuzzquant.raster_io")

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
PUPIL_COLOR = (255, 0, 0)
LIMBIC_COLOR = (0, 255, 0)

_HEADER_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    # row-major, shape (height, width)
    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.array(self.pixels, dtype=np.uint8)
        if pixels.size != self.width * self.height:
            raise CorruptData(f"{pixels.size} pixels for a {self.width}x{self.height} image")
        pixels = pixels.reshape(self.height, self.width)
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "GrayImage":
        array = np.asarray(array)
        if array.ndim != 2:
            raise UnsupportedFormat(f"expected a 2-D array, got shape {array.shape}")
        return cls(width=array.shape[1], height=array.shape[0], pixels=array)

    @property
    def dims(self) -> tuple[int, int]:
        return self.width, self.height

    def at(self, x: int, y: int) -> int:
        return int(self.pixels[y, x])


def luma(rgb: np.ndarray) -> np.ndarray:
    """Integer Rec.601 luma, rounding halves up."""
    rgb = np.asarray(rgb, dtype=np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens = []
    pos = 0
    for _ in range(count):
        match = _HEADER_TOKEN.match(data, pos)
        if match is None:
            raise CorruptData("truncated PGM header")
        tokens.append(match.group(1))
        pos = match.end()
    return tokens, pos


def _parse_pgm(data: bytes) -> GrayImage:
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    try:
        width, height, maxval_ = int(w), int(h), int(maxval)
    except ValueError as e:
        raise CorruptData(f"malformed PGM header: {e}") from e
    if width <= 0 or height <= 0:
        raise CorruptData(f"invalid PGM dimensions {width}x{height}")
    if maxval_ > 255:
        raise UnsupportedFormat(f"16-bit PGM (maxval {maxval_}) is not supported")
    if maxval_ < 1:
        raise CorruptData(f"invalid PGM maxval {maxval_}")

    n = width * height
    if magic == b"P5":
        raster = data[pos + 1 : pos + 1 + n]
        if len(raster) < n:
            raise CorruptData(f"PGM raster truncated: {len(raster)} of {n} bytes")
        pixels = np.frombuffer(raster, dtype=np.uint8)
    else:
        try:
            values = np.array([int(t) for t in data[pos:].split()[:n]], dtype=np.int64)
        except ValueError as e:
            raise CorruptData(f"non-numeric sample in plain PGM: {e}") from e
        if values.size < n:
            raise CorruptData(f"PGM raster truncated: {values.size} of {n} samples")
        if values.min() < 0:
            raise CorruptData("negative sample in plain PGM")
        pixels = values
    if pixels.max() > maxval_:
        raise CorruptData(f"sample exceeds maxval {maxval_}")
    return GrayImage(width=width, height=height, pixels=pixels.astype(np.uint8))


def _load_png(path: Path) -> GrayImage:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                array = np.array(im)
            elif mode in ("RGB", "P"):
                array = luma(np.array(im.convert("RGB")))
            elif mode == "1":
                array = np.array(im.convert("L"))
            else:
                raise UnsupportedFormat(f"unsupported PNG mode {mode} in {path}")
    except UnidentifiedImageError as e:
        raise UnsupportedFormat(f"cannot identify image {path}") from e
    except (OSError, SyntaxError, ValueError) as e:
        raise CorruptData(f"corrupt PNG {path}: {e}") from e
    return GrayImage.from_array(array)


def load_image(path: Union[str, Path]) -> GrayImage:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {path}")
    data = path.read_bytes()
    if data[:2] in (b"P2", b"P5"):
        image = _parse_pgm(data)
    elif data.startswith(PNG_SIGNATURE):
        image = _load_png(path)
    else:
        raise UnsupportedFormat(f"{path} is neither PGM (P2/P5) nor PNG")
    logger.debug(f"Loaded {path} ({image.width}x{image.height})")
    return image


def save_image(img: GrayImage, path: Union[str, Path]) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in (".pgm", ".png"):
        raise UnsupportedFormat(f"cannot write {suffix or 'extensionless'} files, use .pgm or .png")
    im = Image.fromarray(np.ascontiguousarray(img.pixels))
    # Pillow writes binary P5 for mode L with the PPM plugin
    im.save(path, format="PPM" if suffix == ".pgm" else "PNG")
    logger.debug(f"Saved {path}")


def save_rgb(rgb: np.ndarray, path: Union[str, Path]) -> None:
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise UnsupportedFormat(f"color rasters are written as PNG only, got {path.suffix}")
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PNG")


def circle_points(cx: int, cy: int, radius: int) -> Iterator[tuple[int, int]]:
    """Midpoint circle rasterization; yields each locus pixel once."""
    seen = set()
    x, y = radius, 0
    err = 1 - radius
    while x >= y:
        for px, py in (
            (x, y), (y, x), (-y, x), (-x, y),
            (-x, -y), (-y, -x), (y, -x), (x, -y),
        ):
            point = (cx + px, cy + py)
            if point not in seen:
                seen.add(point)
                yield point
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1


def _draw_circle(rgb: np.ndarray, cx: int, cy: int, radius: int, color: tuple[int, int, int]) -> None:
    height, width = rgb.shape[:2]
    if cx - radius < 0 or cy - radius < 0 or cx + radius >= width or cy + radius >= height:
        raise CircleOutOfBounds(f"circle at ({cx}, {cy}) radius {radius} leaves the {width}x{height} image")
    for x, y in circle_points(cx, cy, radius):
        rgb[y, x] = color


def render_overlay(img: GrayImage, pupil: "PupilCircle", limbic_radius: float) -> np.ndarray:
    """3-channel copy of `img` with the pupil circle in red and the limbic circle in green."""
    rgb = np.repeat(img.pixels[:, :, None], 3, axis=2)
    cx, cy = int(round(pupil.center[0])), int(round(pupil.center[1]))
    _draw_circle(rgb, cx, cy, int(round(pupil.radius)), PUPIL_COLOR)
    _draw_circle(rgb, cx, cy, int(round(limbic_radius)), LIMBIC_COLOR)
    return rgb
