"""Field-of-view positional encodings computed from camera intrinsics.

A pixel's position in the camera's field of view is the pair of angles its
viewing ray makes with the principal axis:

    theta_x = atan((u - px) / fx),  theta_y = atan((v - py) / fy)

Both angles lie in (-pi/2, pi/2) and survive cropping and resizing exactly:
mapping a resized-crop coordinate back to the original frame and evaluating
the angles there gives the same numbers the original image would. The sparse
variant summarizes a crop by the angles of its center and four corners (10
numbers); the dense variant carries the angles of every output pixel.
Angles are stored raw, in radians, with no frequency expansion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CropRegion, PinholeCamera, crop_pixel_to_original


@dataclass(frozen=True)
class FieldAngles:
    theta_x: float
    theta_y: float


# Corner order is fixed row-major: (u0,v0), (u1,v0), (u0,v1), (u1,v1).
_CORNER_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class SparseEncoding:
    """Angles of a crop's center and corners; flattens to 10 reals as
    (center, corner0..corner3) with (theta_x, theta_y) per point."""

    center: FieldAngles
    corners: tuple[FieldAngles, FieldAngles, FieldAngles, FieldAngles]

    def flatten(self) -> np.ndarray:
        vals = [self.center.theta_x, self.center.theta_y]
        for c in self.corners:
            vals.extend((c.theta_x, c.theta_y))
        return np.array(vals)


@dataclass
class DenseEncoding:
    """Per-pixel angle grid of shape (out_h, out_w, 2), channels (theta_x,
    theta_y), sampled at output cell centers, plus its provenance."""

    grid: np.ndarray
    crop: CropRegion
    camera: PinholeCamera


def field_angles(cam: PinholeCamera, q) -> FieldAngles:
    """Field-of-view angles of a single pixel q = (u, v)."""
    u, v = float(q[0]), float(q[1])
    return FieldAngles(
        theta_x=float(np.arctan((u - cam.px) / cam.fx)),
        theta_y=float(np.arctan((v - cam.py) / cam.fy)),
    )


def pixel_angles(cam: PinholeCamera, q) -> np.ndarray:
    """Vectorized field angles: q of shape (..., 2) -> (..., 2) radians."""
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    out[..., 0] = np.arctan((q[..., 0] - cam.px) / cam.fx)
    out[..., 1] = np.arctan((q[..., 1] - cam.py) / cam.fy)
    return out


def sparse_encoding(cam: PinholeCamera, crop: CropRegion) -> SparseEncoding:
    """Encode a crop by the field angles of its center and four corners."""
    cu, cv = crop.center
    us = (crop.u0, crop.u1)
    vs = (crop.v0, crop.v1)
    corners = tuple(field_angles(cam, (us[i], vs[j])) for i, j in _CORNER_ORDER)
    return SparseEncoding(center=field_angles(cam, (cu, cv)), corners=corners)


def dense_encoding(cam: PinholeCamera, crop: CropRegion, out_h: int, out_w: int) -> DenseEncoding:
    """Per-pixel field angles for a crop resized to out_h x out_w.

    Cell (row i, col j) is sampled at its center (j + 0.5, i + 0.5) in the
    resized frame, mapped back to the original image, and encoded there.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be >= 1, got {out_h}x{out_w}")
    jj, ii = np.meshgrid(np.arange(out_w), np.arange(out_h))
    centers = np.stack([jj + 0.5, ii + 0.5], axis=-1)
    grid = pixel_angles(cam, crop_pixel_to_original(crop, centers, out_w, out_h))
    return DenseEncoding(grid=grid, crop=crop, camera=cam)


def broadcast_sparse(enc: SparseEncoding, out_h: int, out_w: int) -> np.ndarray:
    """Broadcast a sparse encoding to a spatially constant (out_h, out_w, 10)
    feature grid, for concatenation with feature maps of that resolution."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be >= 1, got {out_h}x{out_w}")
    return np.broadcast_to(enc.flatten(), (out_h, out_w, 10)).copy()


def bilinear_resample(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinearly resample an (H, W, C) cell-center grid to (out_h, out_w, C).

    Source and target grids both sample cell centers; target centers outside
    the source center lattice clamp to the border (edge replication).
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be >= 1, got {out_h}x{out_w}")
    h, w = grid.shape[:2]
    # Target cell center (j+0.5)/out_w in unit coords -> source cell-index space.
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = np.clip(xs - x0, 0.0, 1.0)[None, :, None]
    ty = np.clip(ys - y0, 0.0, 1.0)[:, None, None]
    g00 = grid[np.ix_(y0, x0)]
    g01 = grid[np.ix_(y0, x1)]
    g10 = grid[np.ix_(y1, x0)]
    g11 = grid[np.ix_(y1, x1)]
    top = g00 * (1 - tx) + g01 * tx
    bot = g10 * (1 - tx) + g11 * tx
    return top * (1 - ty) + bot * ty
