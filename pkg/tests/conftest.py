import numpy as np
import pytest

from fuzzquant.raster_io import GrayImage
from fuzzquant.synth import Highlight, SynthEyeSpec, generate_eye


@pytest.fixture
def eye_spec() -> SynthEyeSpec:
    return SynthEyeSpec(dims=(320, 240), pupil_center=(160, 120), r_p=30, r_i=75)


@pytest.fixture
def eye(eye_spec):
    img, _ = generate_eye(eye_spec)
    return img


@pytest.fixture
def highlighted_eye():
    spec = SynthEyeSpec(
        dims=(320, 240),
        pupil_center=(100, 100),
        r_p=30,
        r_i=75,
        highlight=Highlight(position=(100, 100), size=5, value=255),
    )
    img, _ = generate_eye(spec)
    return img, spec


@pytest.fixture
def gray_image():
    return GrayImage.from_array(np.full((240, 320), 128, dtype=np.uint8))
