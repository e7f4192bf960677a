"""Pinhole-camera model, projection, and crop coordinate bookkeeping.

Coordinate conventions used throughout the package:

Camera frame (right-handed, standard computer vision):
  - Origin: camera optical center
  - X-axis: right, Y-axis: down, Z-axis: forward (optical axis, into the scene)
  - Units: meters

Image frame:
  - u (horizontal): increases to the right; v (vertical): increases downward
  - Continuous pixel coordinates in the ORIGINAL image frame; integer grid
    index i covers [i, i+1) and its center sits at i + 0.5
  - Projections of off-screen points are representable (no clipping here)

All geometry is double precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PinholeCamera:
    """Intrinsics of a pinhole camera: focal lengths and principal point in
    pixels, plus the sensor size the principal point must lie on."""

    fx: float
    fy: float
    px: float
    py: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width >= 1 and self.height >= 1):
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not (0 <= self.px < self.width and 0 <= self.py < self.height):
            raise ValueError(
                f"principal point ({self.px}, {self.py}) outside image "
                f"[0,{self.width})x[0,{self.height})"
            )

    @staticmethod
    def from_json(path) -> "PinholeCamera":
        """Load intrinsics from a JSON object with keys fx, fy, px, py, width, height."""
        with open(path) as f:
            d = json.load(f)
        try:
            return PinholeCamera(
                fx=float(d["fx"]),
                fy=float(d["fy"]),
                px=float(d["px"]),
                py=float(d["py"]),
                width=int(d["width"]),
                height=int(d["height"]),
            )
        except KeyError as e:
            raise ValueError(f"camera file {path} missing key {e}") from e


@dataclass(frozen=True)
class CropRegion:
    """Axis-aligned crop rectangle in original-image pixel coordinates."""

    u0: float
    v0: float
    u1: float
    v1: float

    def __post_init__(self):
        if not (self.u0 < self.u1 and self.v0 < self.v1):
            raise ValueError(f"degenerate crop ({self.u0},{self.v0},{self.u1},{self.v1})")

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.u0 + self.u1), 0.5 * (self.v0 + self.v1))


@dataclass(frozen=True)
class Sphere:
    """Sphere in the camera frame; the camera must be outside it."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.distance() <= self.radius:
            raise ValueError("camera inside sphere")

    def distance(self) -> float:
        """Euclidean distance from the camera center to the sphere center."""
        return math.sqrt(sum(c * c for c in self.center))


def project(cam: PinholeCamera, p) -> np.ndarray:
    """Project camera-frame point(s) onto the image plane.

    Args:
        cam: camera intrinsics.
        p: array-like of shape (3,) or (N, 3), camera-frame meters.

    Returns:
        Pixel coordinates, shape (2,) or (N, 2): u = fx*x/z + px, v = fy*y/z + py.

    Raises:
        ValueError: if any point has z <= 0 ("point behind camera").
    """
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    if np.any(z <= 0):
        raise ValueError("point behind camera")
    uv = np.empty(p.shape[:-1] + (2,))
    uv[..., 0] = cam.fx * p[..., 0] / z + cam.px
    uv[..., 1] = cam.fy * p[..., 1] / z + cam.py
    return uv


def backproject_ray(cam: PinholeCamera, q) -> np.ndarray:
    """Unit viewing-ray direction(s) through pixel(s) q, with positive z.

    project(cam, t * backproject_ray(cam, q)) == q for every t > 0.
    """
    q = np.asarray(q, dtype=float)
    d = np.empty(q.shape[:-1] + (3,))
    d[..., 0] = (q[..., 0] - cam.px) / cam.fx
    d[..., 1] = (q[..., 1] - cam.py) / cam.fy
    d[..., 2] = 1.0
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def sphere_silhouette_extent(f: float, s: Sphere) -> tuple[float, float]:
    """Horizontal extent of a sphere's silhouette on a planar image.

    The camera sits at the origin with the image plane at distance f; the
    sphere center must lie in the x-z plane. The two tangent rays in that
    plane hit the image at f*tan(theta +/- alpha), where theta is the
    center's off-axis angle and alpha = asin(r / d) the half-angle the
    sphere subtends at distance d.

    Returns:
        (umin, umax) in image-plane units (same units as f).

    Raises:
        ValueError: camera inside sphere, center off the x-z plane, or a
            tangent ray at/behind the image-plane horizon (unbounded
            silhouette).
    """
    if f <= 0:
        raise ValueError(f"image-plane distance must be positive, got {f}")
    cx, cy, cz = s.center
    if cy != 0:
        raise ValueError("sphere center must lie in the x-z plane")
    d = s.distance()
    if d <= s.radius:
        raise ValueError("camera inside sphere")
    theta = math.atan2(cx, cz)
    alpha = math.asin(s.radius / d)
    if abs(theta) + alpha >= math.pi / 2:
        raise ValueError("silhouette unbounded: tangent ray reaches the image-plane horizon")
    return (f * math.tan(theta - alpha), f * math.tan(theta + alpha))


def crop_pixel_to_original(crop: CropRegion, q, out_w: int, out_h: int) -> np.ndarray:
    """Map resized-crop coordinates back to the original image frame.

    The affine map sends (0, 0) -> (u0, v0) and (out_w, out_h) -> (u1, v1);
    coordinates outside [0,out_w]x[0,out_h] extrapolate exactly.

    Args:
        crop: source region in the original image.
        q: array-like (..., 2) of continuous coordinates in the resized crop.
        out_w, out_h: resized crop dimensions (>= 1).
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be >= 1, got {out_w}x{out_h}")
    q = np.asarray(q, dtype=float)
    out = np.empty(q.shape[:-1] + (2,))
    out[..., 0] = crop.u0 + q[..., 0] * (crop.u1 - crop.u0) / out_w
    out[..., 1] = crop.v0 + q[..., 1] * (crop.v1 - crop.v0) / out_h
    return out


def original_pixel_to_crop(crop: CropRegion, q, out_w: int, out_h: int) -> np.ndarray:
    """Inverse of crop_pixel_to_original (original frame -> resized crop)."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be >= 1, got {out_w}x{out_h}")
    q = np.asarray(q, dtype=float)
    out = np.empty(q.shape[:-1] + (2,))
    out[..., 0] = (q[..., 0] - crop.u0) * out_w / (crop.u1 - crop.u0)
    out[..., 1] = (q[..., 1] - crop.v0) * out_h / (crop.v1 - crop.v0)
    return out
