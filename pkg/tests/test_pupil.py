import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzquant.config import PupilOptions
from fuzzquant.errors import PupilNotFound
from fuzzquant.pupil import PupilCircle, find_pupil, rle_components, run_length_encode
from fuzzquant.raster_io import GrayImage
from fuzzquant.synth import SynthEyeSpec, generate_eye


class TestFindPupil:
    def test_clean_synthetic_eye(self):
        spec = SynthEyeSpec(dims=(320, 240), pupil_center=(100, 100), r_p=30, r_i=75)
        img, _ = generate_eye(spec)
        pupil = find_pupil(img)
        assert math.hypot(pupil.center[0] - 100, pupil.center[1] - 100) <= 1
        assert abs(pupil.radius - 30) <= 1

    def test_specular_highlight(self, highlighted_eye):
        img, spec = highlighted_eye
        pupil = find_pupil(img)
        assert math.hypot(pupil.center[0] - 100, pupil.center[1] - 100) <= 2
        assert abs(pupil.radius - 30) <= 2

    def test_noisy_eye(self):
        spec = SynthEyeSpec(dims=(320, 240), pupil_center=(150, 110), r_p=20, r_i=70, noise_sigma=8, rng_seed=5)
        img, _ = generate_eye(spec)
        pupil = find_pupil(img)
        assert math.hypot(pupil.center[0] - 150, pupil.center[1] - 110) <= 2
        assert abs(pupil.radius - 20) <= 2

    def test_uniform_white(self):
        img = GrayImage.from_array(np.full((240, 320), 255, dtype=np.uint8))
        with pytest.raises(PupilNotFound):
            find_pupil(img)

    def test_tiny_image(self):
        img = GrayImage.from_array(np.arange(16 * 16, dtype=np.uint8).reshape(16, 16))
        with pytest.raises(PupilNotFound):
            find_pupil(img)

    def test_elongated_blob_fails_disc_filter(self):
        pixels = np.full((100, 100), 220, dtype=np.uint8)
        pixels[40:60, 20:80] = 110
        # a diagonal streak falls apart into single pixels
        for i in range(60):
            pixels[20 + i, 20 + i] = 20
        with pytest.raises(PupilNotFound):
            find_pupil(GrayImage.from_array(pixels), PupilOptions(min_area=10))

    def test_result_fits_image(self, eye):
        assert find_pupil(eye).fits(*eye.dims)


class TestComponents:
    def test_empty_mask(self):
        assert rle_components(np.zeros((10, 10), dtype=bool)) == []

    def test_square(self):
        mask = np.zeros((12, 12), dtype=bool)
        mask[5:8, 5:8] = True
        (component,) = rle_components(mask)
        assert component.area == 9
        assert component.centroid == (6.0, 6.0)
        assert component.bbox == (5, 5, 7, 7)
        assert component.fill_ratio == 1.0

    def test_diagonal_contact_is_not_adjacency(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[2:4, 2:4] = True
        mask[4:6, 4:6] = True
        assert len(rle_components(mask)) == 2

    def test_u_shape_merges(self):
        mask = np.zeros((6, 7), dtype=bool)
        mask[1:5, 1] = True
        mask[1:5, 5] = True
        mask[4, 1:6] = True
        (component,) = rle_components(mask)
        assert component.area == int(mask.sum())

    def test_runs(self):
        rows, starts, ends = run_length_encode(np.array([[1, 1, 0, 1], [0, 0, 0, 0], [0, 1, 1, 1]], dtype=bool))
        assert rows.tolist() == [0, 0, 2]
        assert starts.tolist() == [0, 3, 1]
        assert ends.tolist() == [2, 4, 4]

    @given(
        st.lists(st.lists(st.booleans(), min_size=12, max_size=12), min_size=1, max_size=12),
        st.integers(min_value=0, max_value=5),
        st.integers(min_value=0, max_value=5),
    )
    def test_areas_and_translation(self, rows, dx, dy):
        mask = np.array(rows, dtype=bool)
        components = rle_components(mask)
        assert sum(c.area for c in components) == int(mask.sum())

        shifted = np.zeros((mask.shape[0] + dy, mask.shape[1] + dx), dtype=bool)
        shifted[dy:, dx:] = mask
        moved = rle_components(shifted)
        assert [c.area for c in moved] == [c.area for c in components]
        for before, after in zip(components, moved):
            assert after.centroid == pytest.approx((before.centroid[0] + dx, before.centroid[1] + dy))

    def test_disc_radius_from_area(self):
        y, x = np.mgrid[0:101, 0:101]
        mask = np.hypot(x - 50, y - 50) <= 25
        (component,) = rle_components(mask)
        assert abs(math.sqrt(component.area / math.pi) - 25) <= 0.5
        assert component.centroid == (50.0, 50.0)


def test_circle_serializes():
    assert PupilCircle(center=(1.5, 2.0), radius=3.0).to_dict() == {"cx": 1.5, "cy": 2.0, "r": 3.0}


@pytest.mark.parametrize("dx, dy", [(0, 0), (7, 0), (0, -9), (-13, 5), (21, 11)])
@pytest.mark.parametrize("noise", [0.0, 6.0])
def test_find_pupil_follows_the_eye(dx, dy, noise):
    base = SynthEyeSpec(pupil_center=(150, 115), r_p=25, r_i=80, noise_sigma=noise, rng_seed=3)
    moved = base.model_copy(update={"pupil_center": (150 + dx, 115 + dy)})
    first = find_pupil(generate_eye(base)[0])
    second = find_pupil(generate_eye(moved)[0])
    assert abs((second.center[0] - first.center[0]) - dx) <= 1
    assert abs((second.center[1] - first.center[1]) - dy) <= 1
    assert abs(second.radius - first.radius) <= 1
