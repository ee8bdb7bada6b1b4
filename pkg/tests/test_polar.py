import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzquant.errors import DimensionMismatch, DiscOutOfBounds, InvalidPosition, InvalidWidth, ZeroRadius
from fuzzquant.polar import (
    PolarMapCache,
    UnwrappedImage,
    build_polar_map,
    largest_radius,
    ring_mask,
    stretch_rows,
    trace_back,
    unwrap,
)
from fuzzquant.raster_io import GrayImage

SIDE = 220


def coordinate_image(width: int = SIDE, height: int = SIDE) -> GrayImage:
    y, x = np.mgrid[0:height, 0:width]
    return GrayImage.from_array(((x + y) % 256).astype(np.uint8))


class TestBuild:
    def test_radius_one(self):
        polar_map = build_polar_map((10, 10), 1, (21, 21))
        assert polar_map.rows == 1
        assert polar_map.counts.tolist() == [6]

    def test_radius_112(self):
        polar_map = build_polar_map((120, 120), 112, (240, 240))
        assert polar_map.rows == 112
        assert polar_map.counts[-1] == round(2 * math.pi * 112)

    def test_ring_sizes_grow(self):
        polar_map = build_polar_map((50, 50), 40, (101, 101))
        assert np.all(np.diff(polar_map.counts) >= 0)
        assert np.all(polar_map.xs[~polar_map.valid_mask] == -1)

    def test_disc_leaves_image(self):
        with pytest.raises(DiscOutOfBounds):
            build_polar_map((5, 50), 10, (100, 100))

    def test_zero_radius(self):
        with pytest.raises(ZeroRadius):
            build_polar_map((5, 5), 0, (10, 10))

    def test_largest_radius(self):
        assert largest_radius((160, 120), (320, 240)) == 119
        assert largest_radius((3, 100), (320, 240)) == 3


class TestUnwrap:
    def test_constant_image(self):
        img = GrayImage.from_array(np.full((60, 60), 100, dtype=np.uint8))
        ui = unwrap(img, build_polar_map((30, 30), 25, img.dims))
        assert np.all(ui.pixels[ui.valid_mask] == 100)
        assert np.all(ui.pixels[~ui.valid_mask] == 0)

    def test_coordinate_encoding(self):
        img = coordinate_image()
        polar_map = build_polar_map((110, 100), 90, img.dims)
        ui = unwrap(img, polar_map)
        valid = polar_map.valid_mask
        expected = (polar_map.xs[valid] + polar_map.ys[valid]) % 256
        assert np.array_equal(ui.pixels[valid], expected)

    def test_dimension_mismatch(self):
        polar_map = build_polar_map((30, 30), 10, (60, 60))
        with pytest.raises(DimensionMismatch):
            unwrap(GrayImage.from_array(np.zeros((61, 60), dtype=np.uint8)), polar_map)


@st.composite
def disc_geometries(draw):
    cx = draw(st.integers(min_value=1, max_value=SIDE - 2))
    cy = draw(st.integers(min_value=1, max_value=SIDE - 2))
    limit = min(largest_radius((cx, cy), (SIDE, SIDE)), 100)
    radius = draw(st.integers(min_value=1, max_value=limit))
    return (cx, cy), radius


@settings(max_examples=50, deadline=None)
@given(geometry=disc_geometries())
def test_unwrap_is_lossless(geometry):
    center, radius = geometry
    img = coordinate_image()
    polar_map = build_polar_map(center, radius, img.dims)
    ui = unwrap(img, polar_map)
    for r in range(1, polar_map.rows + 1):
        for t in range(int(polar_map.counts[r - 1])):
            x, y = trace_back(polar_map, r, t)
            assert ui.pixels[r - 1, t] == img.at(x, y)


class TestStretch:
    def test_linear_midpoint(self):
        ui = UnwrappedImage(pixels=np.array([[0, 10]], dtype=np.uint8), valid_mask=np.ones((1, 2), dtype=bool))
        assert stretch_rows(ui, 3).pixels.tolist() == [[0.0, 5.0, 10.0]]

    @pytest.mark.parametrize("width", [2, 7, 512])
    def test_constant_rows_stay_constant(self, width):
        img = GrayImage.from_array(np.full((40, 40), 77, dtype=np.uint8))
        rui = stretch_rows(unwrap(img, build_polar_map((20, 20), 15, img.dims)), width)
        assert rui.pixels.shape == (15, width)
        assert np.all(rui.pixels == 77)

    def test_keeps_row_range_and_endpoints(self):
        img = coordinate_image()
        ui = unwrap(img, build_polar_map((100, 100), 60, img.dims))
        rui = stretch_rows(ui)
        for i, n in enumerate(ui.valid_counts()):
            row = ui.pixels[i, :n].astype(float)
            assert rui.pixels[i, 0] == row[0]
            assert rui.pixels[i, -1] == row[-1]
            assert row.min() - 1e-9 <= rui.pixels[i].min()
            assert rui.pixels[i].max() <= row.max() + 1e-9

    def test_width_too_small(self):
        ui = UnwrappedImage(pixels=np.zeros((1, 2), dtype=np.uint8), valid_mask=np.ones((1, 2), dtype=bool))
        with pytest.raises(InvalidWidth):
            stretch_rows(ui, 1)


class TestTraceBack:
    def test_first_sample_is_on_the_x_axis(self):
        polar_map = build_polar_map((30, 40), 5, (80, 80))
        assert trace_back(polar_map, 1, 0) == (31, 40)

    def test_samples_lie_on_their_ring(self):
        polar_map = build_polar_map((100, 100), 80, (201, 201))
        for r in range(1, polar_map.rows + 1):
            n = int(polar_map.counts[r - 1])
            for t in range(n):
                x, y = trace_back(polar_map, r, t)
                assert abs(math.hypot(x - 100, y - 100) - r) <= math.sqrt(2) / 2 + 1e-9

    def test_padding_is_not_a_position(self):
        polar_map = build_polar_map((30, 30), 10, (61, 61))
        with pytest.raises(InvalidPosition):
            trace_back(polar_map, 1, 6)
        with pytest.raises(InvalidPosition):
            trace_back(polar_map, 11, 0)


def test_ring_mask_covers_band_only():
    polar_map = build_polar_map((50, 50), 40, (101, 101))
    mask = ring_mask(polar_map, 10, 20)
    ys, xs = np.nonzero(mask)
    distance = np.hypot(xs - 50, ys - 50)
    assert distance.min() >= 10 - 1 and distance.max() <= 20 + 1


def test_cache_reuses_maps():
    cache = PolarMapCache()
    first = cache.get((30, 30), 20, (64, 64))
    second = cache.get((30, 30), 20, (64, 64))
    assert first is second
    assert cache.hits == 1 and cache.misses == 1
    cache.get((31, 30), 20, (64, 64))
    assert len(cache) == 2


def test_maps_are_immutable():
    polar_map = build_polar_map((30, 30), 10, (61, 61))
    with pytest.raises(ValueError):
        polar_map.xs[0, 0] = 3
