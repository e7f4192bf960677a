"""Field-of-view angle encodings: point, sparse, dense, broadcast.

The oracle throughout is the defining formula theta = atan((coord - pp)/f)
evaluated directly with math.atan; the dense-grid downsampling check uses
bilinear interpolation of a finer grid as an independent path.
"""

import math

import numpy as np
import pytest

from fovlab.encoding import (
    bilinear_resample,
    broadcast_sparse,
    dense_encoding,
    field_angles,
    pixel_angles,
    sparse_encoding,
)
from fovlab.geometry import CropRegion, PinholeCamera, crop_pixel_to_original


class TestFieldAngles:
    def test_principal_point_is_zero(self, k0):
        fa = field_angles(k0, (320, 240))
        assert fa.theta_x == 0.0 and fa.theta_y == 0.0

    def test_offset_equal_to_focal_length_gives_45_degrees(self, k0):
        fa = field_angles(k0, (820, 240))
        assert fa.theta_x == pytest.approx(math.pi / 4, abs=1e-15)
        assert fa.theta_y == 0.0

    def test_image_origin(self, k0):
        # atan(-320/500), atan(-240/500)
        fa = field_angles(k0, (0, 0))
        assert fa.theta_x == pytest.approx(math.atan(-0.64), abs=0)
        assert fa.theta_y == pytest.approx(math.atan(-0.48), abs=0)
        assert fa.theta_x == pytest.approx(-0.5693, abs=1e-4)
        assert fa.theta_y == pytest.approx(-0.4475, abs=1e-4)

    def test_antisymmetry_about_principal_point(self, k0):
        for delta in np.linspace(0.5, 400, 23):
            left = field_angles(k0, (320 - delta, 240)).theta_x
            right = field_angles(k0, (320 + delta, 240)).theta_x
            assert left == -right

    def test_larger_focal_length_shrinks_angles(self, k0):
        wide = PinholeCamera(1000, 1000, 320, 240, 640, 480)
        for u in (0, 100, 500, 639):
            if u == k0.px:
                continue
            assert abs(field_angles(wide, (u, 0)).theta_x) < abs(field_angles(k0, (u, 0)).theta_x)

    def test_range_is_open_half_pi(self, k0):
        for q in ((-1e9, 0), (1e9, 1e9), (0, -1e12)):
            fa = field_angles(k0, q)
            assert -math.pi / 2 < fa.theta_x < math.pi / 2
            assert -math.pi / 2 < fa.theta_y < math.pi / 2


class TestSparseEncoding:
    def test_full_image_center_and_corner_signs(self, k0):
        enc = sparse_encoding(k0, CropRegion(0, 0, 640, 480))
        assert enc.center.theta_x == 0.0 and enc.center.theta_y == 0.0
        tx, ty = math.atan(0.64), math.atan(0.48)
        expected = [(-tx, -ty), (tx, -ty), (-tx, ty), (tx, ty)]
        for corner, (ex, ey) in zip(enc.corners, expected):
            assert corner.theta_x == pytest.approx(ex, abs=0)
            assert corner.theta_y == pytest.approx(ey, abs=0)

    def test_symmetric_crop_centers_at_zero(self, k0):
        for w, h in ((5, 3), (100, 200), (319, 239)):
            enc = sparse_encoding(k0, CropRegion(320 - w, 240 - h, 320 + w, 240 + h))
            assert enc.center.theta_x == 0.0 and enc.center.theta_y == 0.0

    def test_narrow_crop_angles_are_tiny(self, k0):
        enc = sparse_encoding(k0, CropRegion(319, 239, 321, 241))
        for v in enc.flatten():
            assert abs(v) < 0.005

    def test_corners_bracket_center(self, k0):
        rng = np.random.default_rng(8)
        for _ in range(200):
            u0, v0 = rng.uniform(-100, 600, 2)
            crop = CropRegion(u0, v0, u0 + rng.uniform(0.1, 500), v0 + rng.uniform(0.1, 500))
            enc = sparse_encoding(k0, crop)
            c = enc.center
            left, right = enc.corners[0], enc.corners[3]
            assert left.theta_x < c.theta_x < right.theta_x
            assert left.theta_y < c.theta_y < right.theta_y

    def test_flatten_order(self, k0):
        enc = sparse_encoding(k0, CropRegion(10, 20, 30, 40))
        flat = enc.flatten()
        assert flat.shape == (10,)
        assert flat[0] == enc.center.theta_x and flat[1] == enc.center.theta_y
        assert flat[2] == enc.corners[0].theta_x and flat[9] == enc.corners[3].theta_y


class TestDenseEncoding:
    def test_native_resolution_principal_cell(self, k0):
        enc = dense_encoding(k0, CropRegion(0, 0, 640, 480), 480, 640)
        half_pixel_angle = math.atan(0.5 / 500)
        assert abs(enc.grid[240, 320, 0]) <= half_pixel_angle
        assert abs(enc.grid[240, 320, 1]) <= half_pixel_angle

    def test_single_cell_collapses_to_crop_center(self, k0):
        crop = CropRegion(100, 50, 300, 250)
        enc = dense_encoding(k0, crop, 1, 1)
        fa = field_angles(k0, crop.center)
        assert enc.grid.shape == (1, 1, 2)
        assert enc.grid[0, 0, 0] == fa.theta_x and enc.grid[0, 0, 1] == fa.theta_y

    def test_downsample_matches_bilinear_interpolation(self, k0):
        # Central 100x100 crop: atan is nearly linear there, so the 24x32
        # grid agrees with bilinearly resampled 48x64 angles to < 1e-6 rad.
        crop = CropRegion(270, 190, 370, 290)
        fine = dense_encoding(k0, crop, 48, 64).grid
        coarse = dense_encoding(k0, crop, 24, 32).grid
        np.testing.assert_allclose(bilinear_resample(fine, 24, 32), coarse, rtol=0, atol=1e-6)

    def test_rows_constant_in_theta_y_and_monotone(self, k0):
        enc = dense_encoding(k0, CropRegion(37.5, 80.25, 500, 400), 12, 17)
        ty = enc.grid[..., 1]
        assert np.all(ty == ty[:, :1])  # axis-aligned crop: theta_y constant per row
        tx = enc.grid[..., 0]
        assert np.all(np.diff(tx, axis=1) > 0)
        assert np.all(np.diff(ty, axis=0) > 0)

    def test_grid_orientation_matches_cell_centers(self, k0):
        crop = CropRegion(0, 0, 640, 480)
        enc = dense_encoding(k0, crop, 24, 32)
        q = crop_pixel_to_original(crop, (2 + 0.5, 7 + 0.5), 32, 24)
        fa = field_angles(k0, q)
        assert enc.grid[7, 2, 0] == fa.theta_x and enc.grid[7, 2, 1] == fa.theta_y


class TestBroadcastSparse:
    def test_single_cell_is_the_encoding_itself(self, k0):
        enc = sparse_encoding(k0, CropRegion(5, 5, 50, 60))
        grid = broadcast_sparse(enc, 1, 1)
        np.testing.assert_array_equal(grid[0, 0], enc.flatten())

    def test_all_locations_identical(self, k0):
        enc = sparse_encoding(k0, CropRegion(5, 5, 50, 60))
        grid = broadcast_sparse(enc, 7, 7)
        assert grid.shape == (7, 7, 10)
        assert np.all(grid == grid[0, 0])

    def test_mean_equals_encoding_exactly(self, k0):
        enc = sparse_encoding(k0, CropRegion(100, 100, 400, 300))
        grid = broadcast_sparse(enc, 6, 9)
        np.testing.assert_array_equal(grid.mean(axis=(0, 1)), enc.flatten())


class TestCropResizeInvariance:
    """The load-bearing property: angles computed through any crop+resize
    chain equal the original image's angles at the corresponding pixel."""

    def test_invariance_over_random_crops(self, k0):
        from fovlab.geometry import original_pixel_to_crop

        rng = np.random.default_rng(12)
        for _ in range(2000):
            u0, v0 = rng.uniform(0, 500, 2)
            crop = CropRegion(u0, v0, u0 + rng.uniform(1, 400), v0 + rng.uniform(1, 400))
            out_w, out_h = (int(x) for x in rng.integers(1, 128, 2))
            p = rng.uniform([crop.u0, crop.v0], [crop.u1, crop.v1])
            q_resized = original_pixel_to_crop(crop, p, out_w, out_h)
            p_back = crop_pixel_to_original(crop, q_resized, out_w, out_h)
            np.testing.assert_allclose(
                pixel_angles(k0, p_back), pixel_angles(k0, p), rtol=0, atol=1e-12
            )

    def test_dense_encoding_agrees_with_original_image_angles(self, k0):
        rng = np.random.default_rng(13)
        for _ in range(50):
            u0, v0 = rng.uniform(0, 400, 2)
            crop = CropRegion(u0, v0, u0 + rng.uniform(10, 200), v0 + rng.uniform(10, 200))
            enc = dense_encoding(k0, crop, 5, 4)
            for i in range(5):
                for j in range(4):
                    q = crop_pixel_to_original(crop, (j + 0.5, i + 0.5), 4, 5)
                    fa = field_angles(k0, q)
                    assert abs(enc.grid[i, j, 0] - fa.theta_x) <= 1e-12
                    assert abs(enc.grid[i, j, 1] - fa.theta_y) <= 1e-12


def test_bilinear_resample_identity():
    rng = np.random.default_rng(4)
    grid = rng.normal(size=(6, 9, 2))
    np.testing.assert_array_equal(bilinear_resample(grid, 6, 9), grid)
