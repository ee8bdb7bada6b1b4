"""Circular fuzzy iris segmentation.

find the pupil -> unwrap a pupil-concentric disc (UI) -> stretch it to a
rectangle (RUI) -> radial profiles A, B, C -> 3-means quantizations P, Q, R
-> three fuzzy iris bands -> 2-of-3 vote -> limbic boundary row.

The limbic search therefore runs over 3 * L profile cells, L being the
unwrap radius, instead of a 3-D (x, y, r) accumulator.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .config import CFIS_CLUSTERS, CfisConfig
from .errors import DiscOutOfBounds, FuzzquantError, LengthMismatch, NoIrisBand, RowCountMismatch
from .indicators import CombinedIndicators, combined_indicators
from .polar import (
    PolarMap,
    PolarMapCache,
    RectUnwrapped,
    UnwrappedImage,
    largest_radius,
    ring_mask,
    stretch_rows,
    unwrap,
)
from .pupil import PupilCircle, find_pupil
from .quantizer import Quantization, kmeans_quantize
from .raster_io import GrayImage

logger = logging.getLogger("fuzzquant.cfis")

IRIS_CLUSTER = 2
MIN_PROFILE_LENGTH = 3
PROFILE_NAMES = ("A", "B", "C")
BAND_NAMES = ("P", "Q", "R")
TIMING_STAGES = ("pupil", "unwrap", "profiles", "quantize", "vote", "total")


@dataclass(frozen=True)
class RadialProfiles:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def length(self) -> int:
        return int(self.a.size)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter((self.a, self.b, self.c))

    def as_matrix(self) -> np.ndarray:
        return np.column_stack((self.a, self.b, self.c))


@dataclass(frozen=True)
class FuzzyIrisBand:
    crisp: np.ndarray
    cfi: np.ndarray
    fib: np.ndarray
    quantization: Quantization
    indicators: CombinedIndicators

    @property
    def rows(self) -> tuple[int, int]:
        """First and last member row, 1-based."""
        members = np.flatnonzero(self.crisp)
        return int(members[0]) + 1, int(members[-1]) + 1


@dataclass
class SegmentationResult:
    pupil: PupilCircle
    limbic_row: int
    voted: np.ndarray
    bands: tuple[FuzzyIrisBand, FuzzyIrisBand, FuzzyIrisBand]
    iris_segment: np.ndarray
    band_start: int
    profiles: RadialProfiles
    search_cells: int
    timings_us: dict[str, int] = field(default_factory=dict)
    polar_map: Optional[PolarMap] = None
    ui: Optional[UnwrappedImage] = None
    rui: Optional[RectUnwrapped] = None

    @property
    def limbic_radius_px(self) -> int:
        # rows are unit-radius rings starting at r = 1
        return self.limbic_row

    @property
    def timings_ms(self) -> dict[str, float]:
        return {stage: round(us / 1000.0, 3) for stage, us in self.timings_us.items()}

    def iris_ring(self) -> np.ndarray:
        """Source-image mask of the voted band, traced back through the polar map."""
        if self.polar_map is None:
            raise FuzzquantError("segmentation result carries no polar map")
        return ring_mask(self.polar_map, self.band_start, self.limbic_row)

    def to_dict(self) -> dict:
        return {
            "pupil": self.pupil.to_dict(),
            "limbic_row": int(self.limbic_row),
            "limbic_radius_px": int(self.limbic_radius_px),
            "voted": [bool(v) for v in self.voted],
            "timings_ms": self.timings_ms,
        }


def longest_run(flags: Sequence[bool]) -> Optional[tuple[int, int]]:
    """(first, last) 1-based rows of the longest true run; ties go to the outermost run."""
    flags = np.asarray(flags, dtype=bool)
    if not flags.any():
        return None
    padded = np.concatenate(([False], flags, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    lengths = ends - starts
    best = np.flatnonzero(lengths == lengths.max())[-1]
    return int(starts[best]) + 1, int(ends[best])


def radial_profiles(ui: UnwrappedImage, rui: RectUnwrapped) -> RadialProfiles:
    if ui.rows != rui.rows:
        raise RowCountMismatch(f"UI has {ui.rows} rows, RUI has {rui.rows}")
    if ui.rows < MIN_PROFILE_LENGTH:
        raise RowCountMismatch(f"profiles need at least {MIN_PROFILE_LENGTH} rows, got {ui.rows}")
    counts = ui.valid_counts()
    if np.any(counts == 0):
        raise RowCountMismatch(f"UI row {int(np.argmin(counts)) + 1} has no valid pixels")

    # padding is excluded so black fill never drags A toward the pupil
    a = np.where(ui.valid_mask, ui.pixels, 0).sum(axis=1, dtype=np.float64) / counts
    b = rui.pixels.mean(axis=1)
    c = (a + b) / 2
    return RadialProfiles(a=a, b=b, c=c)


def iris_band(profile: np.ndarray, q3: Quantization) -> FuzzyIrisBand:
    profile = np.asarray(profile, dtype=np.float64)
    if q3.k != CFIS_CLUSTERS:
        raise ValueError(f"iris band needs a {CFIS_CLUSTERS}-means quantization, got k={q3.k}")
    ind = combined_indicators(profile, q3)
    run = longest_run(np.asarray(q3.labels) == IRIS_CLUSTER)
    if run is None:
        raise NoIrisBand("no row falls in the iris cluster")
    crisp = np.zeros(profile.size, dtype=bool)
    crisp[run[0] - 1 : run[1]] = True
    return FuzzyIrisBand(crisp=crisp, cfi=ind.cfi, fib=ind.fib, quantization=q3, indicators=ind)


def vote_iris_rows(bands: Sequence[Sequence[bool]]) -> np.ndarray:
    """Rows voted into the iris band by at least two of the three bands."""
    if len(bands) != 3:
        raise LengthMismatch(f"expected 3 bands, got {len(bands)}")
    stacked = [np.asarray(b, dtype=bool) for b in bands]
    if len({b.size for b in stacked}) != 1:
        raise LengthMismatch(f"band lengths differ: {[b.size for b in stacked]}")
    return np.sum(stacked, axis=0) >= 2


def limbic_boundary(voted: Sequence[bool]) -> int:
    run = longest_run(voted)
    if run is None:
        raise NoIrisBand("no row was voted into the iris band")
    return run[1]


class _Stopwatch:
    def __init__(self) -> None:
        self.timings_us: dict[str, int] = {}
        self._start = time.perf_counter_ns()

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter_ns()
        try:
            yield
        except FuzzquantError as e:
            if e.stage is None:
                e.stage = name
            raise
        finally:
            self.timings_us[name] = self.timings_us.get(name, 0) + (time.perf_counter_ns() - start) // 1000

    def finish(self) -> dict[str, int]:
        self.timings_us["total"] = (time.perf_counter_ns() - self._start) // 1000
        return self.timings_us


class Segmenter:
    """Runs the pipeline on many images, sharing polar maps across equal geometries."""

    def __init__(self, config: Optional[CfisConfig] = None, cache: Optional[PolarMapCache] = None) -> None:
        self.config = config or CfisConfig()
        self.cache = cache if cache is not None else PolarMapCache()

    def _unwrap_radius(self, center: tuple[int, int], dims: tuple[int, int]) -> int:
        radius = largest_radius(center, dims)
        if self.config.max_radius is not None:
            radius = min(radius, self.config.max_radius)
        return radius

    def segment(self, img: GrayImage) -> SegmentationResult:
        config = self.config
        watch = _Stopwatch()

        with watch.stage("pupil"):
            pupil = find_pupil(img, config.pupil)

        with watch.stage("unwrap"):
            center = (int(round(pupil.center[0])), int(round(pupil.center[1])))
            radius = self._unwrap_radius(center, img.dims)
            if radius < MIN_PROFILE_LENGTH:
                raise DiscOutOfBounds(
                    f"unwrap radius {radius} around {center} is below the {MIN_PROFILE_LENGTH} rows a profile needs"
                )
            polar_map = self.cache.get(center, radius, img.dims)
            ui = unwrap(img, polar_map)
            rui = stretch_rows(ui, config.rui_width)

        with watch.stage("profiles"):
            profiles = radial_profiles(ui, rui)

        with watch.stage("quantize"):
            quantizations = [kmeans_quantize(profile, CFIS_CLUSTERS, config.quantize) for profile in profiles]

        with watch.stage("vote"):
            bands = tuple(iris_band(profile, q) for profile, q in zip(profiles, quantizations))
            cells = np.stack([band.crisp for band in bands])
            voted = vote_iris_rows(cells)
            # band cells the vote and the limbic search read, 3 per row
            search_cells = int(cells.size)

        with watch.stage("limbic"):
            limbic_row = limbic_boundary(voted)
            band_start = longest_run(voted)[0]
            iris_segment = rui.pixels[band_start - 1 : limbic_row].copy()

        timings = watch.finish()
        timings["vote"] += timings.pop("limbic")
        logger.debug(f"limbic row {limbic_row} of {profiles.length}, total {timings['total']} us")
        return SegmentationResult(
            pupil=pupil,
            limbic_row=limbic_row,
            voted=voted,
            bands=bands,
            iris_segment=iris_segment,
            band_start=band_start,
            profiles=profiles,
            search_cells=search_cells,
            timings_us=timings,
            polar_map=polar_map,
            ui=ui,
            rui=rui,
        )


def segment(img: GrayImage, config: Optional[CfisConfig] = None) -> SegmentationResult:
    return Segmenter(config).segment(img)
