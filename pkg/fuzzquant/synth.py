"""Synthetic eye images with exact ground truth."""

import logging
from typing import Iterable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import InvalidSpec
from .raster_io import GrayImage

logger = logging.getLogger("fuzzquant.synth")

DEFAULT_DIMS = (320, 240)
MIN_PUPIL_RADIUS = 5


class Highlight(BaseModel):
    model_config = ConfigDict(frozen=True)

    position: tuple[int, int]
    size: int = Field(5, gt=0)
    value: int = Field(255, ge=0, le=255)


class SynthEyeSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    dims: tuple[int, int] = DEFAULT_DIMS
    pupil_center: tuple[float, float] = (160.0, 120.0)
    r_p: float = 30.0
    r_i: float = 75.0
    intensities: tuple[int, int, int] = (30, 110, 220)
    noise_sigma: float = 0.0
    highlight: Optional[Highlight] = None
    rng_seed: int = 0
    # width in px of a linear ramp across each boundary; 0 keeps hard edges
    blur_width: float = 0.0

    def validate_geometry(self) -> None:
        w, h = self.dims
        cx, cy = self.pupil_center
        pupil, iris, sclera = self.intensities
        if w <= 0 or h <= 0:
            raise InvalidSpec(f"invalid image dims {self.dims}")
        if self.r_p < MIN_PUPIL_RADIUS:
            raise InvalidSpec(f"pupil radius {self.r_p} below {MIN_PUPIL_RADIUS}")
        if self.r_i <= self.r_p:
            raise InvalidSpec(f"iris radius {self.r_i} must exceed pupil radius {self.r_p}")
        border = min(cx, cy, w - 1 - cx, h - 1 - cy)
        if self.r_i > border:
            raise InvalidSpec(f"iris radius {self.r_i} exceeds distance {border} to the image border")
        if not 0 <= pupil < iris < sclera <= 255:
            raise InvalidSpec(f"intensities must satisfy 0 <= pupil < iris < sclera <= 255, got {self.intensities}")
        if self.noise_sigma < 0 or self.blur_width < 0:
            raise InvalidSpec("noise_sigma and blur_width must be non-negative")


def generate_eye(spec: SynthEyeSpec) -> tuple[GrayImage, SynthEyeSpec]:
    spec.validate_geometry()
    w, h = spec.dims
    cx, cy = spec.pupil_center
    pupil, iris, sclera = (float(v) for v in spec.intensities)

    y, x = np.mgrid[0:h, 0:w]
    d = np.hypot(x - cx, y - cy)
    if spec.blur_width > 0:
        half = spec.blur_width / 2
        image = np.interp(
            d,
            [spec.r_p - half, spec.r_p + half, spec.r_i - half, spec.r_i + half],
            [pupil, iris, iris, sclera],
        )
    else:
        image = np.full((h, w), sclera)
        image[d <= spec.r_i] = iris
        image[d <= spec.r_p] = pupil

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        image = image + rng.normal(0.0, spec.noise_sigma, size=image.shape)

    if spec.highlight is not None:
        hx, hy = spec.highlight.position
        half = spec.highlight.size // 2
        x0, y0 = max(hx - half, 0), max(hy - half, 0)
        # stops clipped too: a negative stop would wrap around the image
        x1 = max(hx - half + spec.highlight.size, 0)
        y1 = max(hy - half + spec.highlight.size, 0)
        image[y0:y1, x0:x1] = spec.highlight.value

    pixels = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    return GrayImage.from_array(pixels), spec


def sweep_specs(
    n: int,
    seed: int = 0,
    noises: Iterable[float] = (0.0,),
    dims: tuple[int, int] = DEFAULT_DIMS,
    pupil_radii: tuple[int, int] = (15, 40),
    iris_radii: tuple[int, int] = (55, 90),
    highlight_rate: float = 0.5,
    margin: int = 15,
) -> list[SynthEyeSpec]:
    """Deterministic corpus: n eyes per noise level, sclera visible all around the iris."""
    rng = np.random.default_rng(seed)
    w, h = dims
    specs = []
    for sigma in noises:
        for _ in range(n):
            r_p = int(rng.integers(pupil_radii[0], pupil_radii[1] + 1))
            r_i = int(rng.integers(max(iris_radii[0], r_p + 15), iris_radii[1] + 1))
            reach = r_i + margin
            if 2 * reach > min(w, h) - 1:
                raise InvalidSpec(f"iris radius {r_i} plus margin {margin} does not fit in {w}x{h}")
            cx = int(rng.integers(reach, w - reach))
            cy = int(rng.integers(reach, h - reach))
            highlight = None
            if rng.random() < highlight_rate:
                offset = max(1, r_p // 3)
                hx = cx + int(rng.integers(-offset, offset + 1))
                hy = cy + int(rng.integers(-offset, offset + 1))
                highlight = Highlight(position=(hx, hy), size=5, value=255)
            specs.append(
                SynthEyeSpec(
                    dims=dims,
                    pupil_center=(float(cx), float(cy)),
                    r_p=float(r_p),
                    r_i=float(r_i),
                    noise_sigma=float(sigma),
                    highlight=highlight,
                    rng_seed=int(rng.integers(0, 2**31 - 1)),
                )
            )
    logger.debug(f"generated {len(specs)} specs from seed {seed}")
    return specs
