"""Projection, back-projection, sphere silhouettes, crop coordinate maps.

Expected values are hand evaluations of the pinhole equations
(u = fx*x/z + px) or of the tangent-ray silhouette construction
(endpoints f*tan(theta +/- asin(r/d))).
"""

import math

import numpy as np
import pytest

from fovlab.geometry import (
    CropRegion,
    PinholeCamera,
    Sphere,
    backproject_ray,
    crop_pixel_to_original,
    original_pixel_to_crop,
    project,
    sphere_silhouette_extent,
)


def silhouette_width(f, r, d, theta=0.0):
    s = Sphere((d * math.sin(theta), 0.0, d * math.cos(theta)), r)
    umin, umax = sphere_silhouette_extent(f, s)
    return umax - umin


class TestProject:
    def test_on_axis_point_hits_principal_point(self, k0):
        np.testing.assert_array_equal(project(k0, (0, 0, 0.5)), [320.0, 240.0])

    def test_hand_evaluated_offset(self, k0):
        # u = 500 * 0.1 / 0.5 + 320 = 420
        np.testing.assert_allclose(project(k0, (0.1, 0, 0.5)), [420.0, 240.0], rtol=0, atol=0)

    def test_behind_camera_rejected(self, k0):
        with pytest.raises(ValueError, match="behind camera"):
            project(k0, (0, 0, -1.0))
        with pytest.raises(ValueError, match="behind camera"):
            project(k0, (0.3, 0.1, 0.0))

    def test_vectorized_shape(self, k0):
        pts = np.array([[0, 0, 0.5], [0.1, 0, 0.5], [0, -0.1, 1.0]])
        assert project(k0, pts).shape == (3, 2)

    def test_scale_depth_ambiguity(self, k0):
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = rng.uniform([-1, -1, 0.1], [1, 1, 10])
            base = project(k0, p)
            for s in (2.0, 0.5, 8.0):  # power-of-two scales cancel exactly
                np.testing.assert_array_equal(project(k0, s * p), base)
            s = rng.uniform(0.1, 10)
            np.testing.assert_allclose(project(k0, s * p), base, rtol=0, atol=1e-9)


class TestBackprojectRay:
    def test_principal_point_is_optical_axis(self, k0):
        np.testing.assert_allclose(backproject_ray(k0, (320, 240)), [0, 0, 1], atol=1e-15)

    def test_unit_offset_direction(self, k0):
        # (820-320)/500 = 1, so direction is normalize(1, 0, 1)
        expected = np.array([1, 0, 1]) / math.sqrt(2)
        np.testing.assert_allclose(backproject_ray(k0, (820, 240)), expected, atol=1e-15)

    def test_round_trip_through_projection(self, k0):
        rng = np.random.default_rng(5)
        for _ in range(100):
            q = rng.uniform([-200, -200], [900, 700])
            d = backproject_ray(k0, q)
            assert d[2] > 0
            assert abs(np.linalg.norm(d) - 1.0) < 1e-14
            np.testing.assert_allclose(project(k0, 2.0 * d), q, rtol=0, atol=1e-9)

    def test_rays_parallel_to_original_points(self, k0):
        rng = np.random.default_rng(6)
        for _ in range(100):
            p = rng.uniform([-2, -2, 0.1], [2, 2, 10])
            d = backproject_ray(k0, project(k0, p))
            cos = float(d @ p / np.linalg.norm(p))
            assert abs(cos - 1.0) < 1e-10


class TestSphereSilhouette:
    def test_small_circle_up_close(self):
        # r=0.485 at distance 2: width = 2*tan(asin(0.485/2)) = 0.49992
        assert silhouette_width(1.0, 0.485, 2.0) == pytest.approx(0.5, abs=1e-3)

    def test_ten_times_bigger_ten_times_farther_matches(self):
        w_near = silhouette_width(1.0, 0.485, 2.0)
        w_far = silhouette_width(1.0, 4.85, 20.0)
        assert w_far == pytest.approx(0.5, abs=1e-3)
        # r/d is scale invariant, so the widths agree exactly
        assert w_near == w_far

    def test_width_scales_inversely_with_distance(self):
        # Exact tangent geometry deviates from 1/d by ~2.3% at d=2 (alpha is
        # 14 degrees there); genuine small angles recover 1/d within 1%.
        near = silhouette_width(1.0, 0.485, 4.0) / silhouette_width(1.0, 0.485, 2.0)
        assert near == pytest.approx(0.5, rel=0.025)
        far = silhouette_width(1.0, 0.485, 40.0) / silhouette_width(1.0, 0.485, 20.0)
        assert far == pytest.approx(0.5, rel=0.01)

    def test_monotone_in_distance_and_angle(self):
        widths = [silhouette_width(1.0, 0.485, d) for d in np.linspace(1.5, 6.0, 20)]
        assert all(a > b for a, b in zip(widths, widths[1:]))
        by_angle = [silhouette_width(1.0, 0.485, 3.0, th) for th in np.linspace(0, 0.8, 20)]
        assert all(a < b for a, b in zip(by_angle, by_angle[1:]))
        by_neg_angle = [silhouette_width(1.0, 0.485, 3.0, -th) for th in np.linspace(0, 0.8, 20)]
        np.testing.assert_allclose(by_angle, by_neg_angle, rtol=1e-12)

    def test_camera_inside_sphere_rejected(self):
        with pytest.raises(ValueError, match="inside sphere"):
            Sphere((0, 0, 1.0), 1.5)
        s = Sphere((0, 0, 2.0), 0.5)
        assert s.distance() == 2.0

    def test_center_off_xz_plane_rejected(self):
        with pytest.raises(ValueError, match="x-z plane"):
            sphere_silhouette_extent(1.0, Sphere((0, 0.5, 2.0), 0.1))

    def test_unbounded_silhouette_rejected(self):
        # theta = 60 deg, alpha = asin(0.9) = 64 deg: tangent past the horizon
        th = math.radians(60)
        s = Sphere((2 * math.sin(th), 0.0, 2 * math.cos(th)), 1.8)
        with pytest.raises(ValueError, match="unbounded"):
            sphere_silhouette_extent(1.0, s)


class TestCropMapping:
    def test_corner_fixed_point(self):
        crop = CropRegion(100, 100, 200, 200)
        np.testing.assert_array_equal(crop_pixel_to_original(crop, (0, 0), 100, 100), [100, 100])

    def test_midpoint_under_identity_scale(self):
        crop = CropRegion(100, 100, 200, 200)
        np.testing.assert_array_equal(crop_pixel_to_original(crop, (50, 50), 100, 100), [150, 150])

    def test_half_resolution_midpoint(self):
        # 16/32 * 640 = 320, 12/24 * 480 = 240
        crop = CropRegion(0, 0, 640, 480)
        np.testing.assert_array_equal(crop_pixel_to_original(crop, (16, 12), 32, 24), [320, 240])

    def test_extrapolation_is_exact(self):
        crop = CropRegion(100, 100, 200, 200)
        np.testing.assert_array_equal(
            crop_pixel_to_original(crop, (-50, 150), 100, 100), [50, 250]
        )

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            u0, v0 = rng.uniform(0, 500, 2)
            crop = CropRegion(u0, v0, u0 + rng.uniform(1, 300), v0 + rng.uniform(1, 300))
            out_w, out_h = rng.integers(1, 200, 2)
            q = rng.uniform(-100, 800, 2)
            back = original_pixel_to_crop(crop, crop_pixel_to_original(crop, q, out_w, out_h), out_w, out_h)
            np.testing.assert_allclose(back, q, rtol=0, atol=1e-12)

    def test_degenerate_crop_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            CropRegion(10, 10, 10, 20)
        with pytest.raises(ValueError):
            crop_pixel_to_original(CropRegion(0, 0, 10, 10), (0, 0), 0, 5)


class TestPinholeCamera:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError, match="focal"):
            PinholeCamera(0, 500, 320, 240, 640, 480)
        with pytest.raises(ValueError, match="principal"):
            PinholeCamera(500, 500, 640, 240, 640, 480)
        with pytest.raises(ValueError, match="size"):
            PinholeCamera(500, 500, 0, 0, 0, 480)

    def test_from_json(self, camera_file, k0):
        assert PinholeCamera.from_json(camera_file) == k0

    def test_from_json_missing_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"fx": 500}')
        with pytest.raises(ValueError, match="missing key"):
            PinholeCamera.from_json(path)
