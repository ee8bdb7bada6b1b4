"""Pupil finder: darkest 3-means cluster, run-length connected components, disc filter."""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import CFIS_CLUSTERS, PupilOptions
from .errors import PupilNotFound
from .quantizer import quantize_histogram
from .raster_io import GrayImage

logger = logging.getLogger("fuzzquant.pupil")

MIN_IMAGE_SIDE = 32


@dataclass(frozen=True)
class PupilCircle:
    center: tuple[float, float]
    radius: float

    def fits(self, width: int, height: int) -> bool:
        cx, cy = self.center
        r = self.radius
        return cx - r >= 0 and cy - r >= 0 and cx + r <= width - 1 and cy + r <= height - 1

    def to_dict(self) -> dict[str, float]:
        return {"cx": float(self.center[0]), "cy": float(self.center[1]), "r": float(self.radius)}


@dataclass(frozen=True)
class Component:
    area: int
    centroid: tuple[float, float]
    # inclusive pixel bounds (x0, y0, x1, y1)
    bbox: tuple[int, int, int, int]
    runs: int

    @property
    def fill_ratio(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return self.area / ((x1 - x0 + 1) * (y1 - y0 + 1))


def run_length_encode(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Foreground runs of a binary raster as (row, start, end) arrays, end exclusive, row-major order."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {mask.shape}")
    padded = np.zeros((mask.shape[0], mask.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    edges = np.diff(padded, axis=1)
    rows, starts = np.nonzero(edges == 1)
    _, ends = np.nonzero(edges == -1)
    return rows, starts, ends


def _find(parent: list[int], i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def rle_components(mask: np.ndarray) -> list[Component]:
    """4-connected components of a binary raster, built from row runs.

    Runs on adjacent rows belong to the same component when they share at
    least one column. Components are ordered by their first run.
    """
    rows, starts, ends = run_length_encode(mask)
    n = rows.size
    if n == 0:
        return []

    parent = list(range(n))
    row_first = np.searchsorted(rows, np.arange(rows.max() + 2))
    for y in range(1, int(rows.max()) + 1):
        a, a_end = row_first[y - 1], row_first[y]
        b, b_end = row_first[y], row_first[y + 1]
        while a < a_end and b < b_end:
            if starts[a] < ends[b] and starts[b] < ends[a]:
                ra, rb = _find(parent, a), _find(parent, b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            if ends[a] <= ends[b]:
                a += 1
            else:
                b += 1

    roots = np.array([_find(parent, i) for i in range(n)])
    ids, label = np.unique(roots, return_inverse=True)
    lengths = (ends - starts).astype(np.float64)
    area = np.bincount(label, weights=lengths)
    sum_x = np.bincount(label, weights=(starts + ends - 1) * lengths / 2)
    sum_y = np.bincount(label, weights=rows * lengths)
    run_count = np.bincount(label)

    components = []
    for c in range(ids.size):
        members = label == c
        components.append(
            Component(
                area=int(area[c]),
                centroid=(float(sum_x[c] / area[c]), float(sum_y[c] / area[c])),
                bbox=(
                    int(starts[members].min()),
                    int(rows[members].min()),
                    int(ends[members].max() - 1),
                    int(rows[members].max()),
                ),
                runs=int(run_count[c]),
            )
        )
    return components


def find_pupil(img: GrayImage, options: Optional[PupilOptions] = None) -> PupilCircle:
    options = options or PupilOptions()
    if img.width < MIN_IMAGE_SIDE or img.height < MIN_IMAGE_SIDE:
        raise PupilNotFound(f"image {img.width}x{img.height} is smaller than {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}")

    counts = np.bincount(img.pixels.ravel(), minlength=256)
    if np.count_nonzero(counts) < CFIS_CLUSTERS:
        raise PupilNotFound(f"image has {np.count_nonzero(counts)} distinct intensities, cannot split into {CFIS_CLUSTERS} clusters")

    q, lookup = quantize_histogram(counts, CFIS_CLUSTERS, options.quantize)
    mask = lookup[img.pixels] == 1
    logger.debug(f"pupil cluster centroid {q.centroids[0]:.1f}, {int(mask.sum())} dark pixels")

    min_area = options.min_area_for(img.width, img.height)
    components = rle_components(mask)
    candidates = sorted(
        (c for c in components if c.area >= min_area and c.fill_ratio >= options.disc_likeness),
        key=lambda c: c.area,
        reverse=True,
    )
    for component in candidates:
        circle = PupilCircle(center=component.centroid, radius=math.sqrt(component.area / math.pi))
        if circle.radius >= 1 and circle.fits(img.width, img.height):
            logger.debug(f"pupil at {circle.center} radius {circle.radius:.2f} from {len(components)} components")
            return circle

    raise PupilNotFound(f"none of {len(components)} dark components passed the disc filter")
