"""Visually ambiguous parallelepipeds under a pinhole camera.

The shape family: a square face of fixed width lying fronto-parallel in the
camera's XY plane, extruded along an arbitrary 3-vector. Corner order is
fixed and correspondence is always by index:

    front face (-,-), (+,-), (-,+), (+,+) in local x,y   -> indices 0..3
    back face, same order (front corner + extrusion)     -> indices 4..7

Placing such a solid at a lateral offset while shearing its extrusion by
exactly the offset-to-depth ratio reproduces the reference's image up to a
constant shift: after centering the projected corners, the two instances are
indistinguishable, while their 3D shapes differ. `construct_ambiguous` builds
these counterparts in closed form; `mine_ambiguous` finds them numerically by
damped Gauss-Newton on the centered reprojection residual; `sweep_scatter`
tabulates 2D/3D error trade-offs over an offset grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import PinholeCamera, Sphere, project, sphere_silhouette_extent


@dataclass(frozen=True)
class Parallelepiped:
    """Square-faced extruded solid: face width in meters and extrusion vector."""

    face_width: float
    extrusion: tuple[float, float, float]

    def __post_init__(self):
        if not self.face_width > 0:
            raise ValueError(f"face width must be positive, got {self.face_width}")
        if not self.extrusion[2] > 0:
            raise ValueError("extrusion must extend away from the camera (ez > 0)")


@dataclass(frozen=True)
class Placement:
    """Rigid translation of the front-face center in the camera frame."""

    t: tuple[float, float, float]

    def __post_init__(self):
        if not self.t[2] > 0:
            raise ValueError("placement must be in front of the camera (tz > 0)")


def reference_instance() -> tuple[Parallelepiped, Placement]:
    """The fixed reference cuboid: 0.2 m square face extruded 0.2 m straight
    back, front face 0.5 m in front of the camera on the optical axis."""
    return (
        Parallelepiped(face_width=0.2, extrusion=(0.0, 0.0, 0.2)),
        Placement(t=(0.0, 0.0, 0.5)),
    )


def corners_3d(pp: Parallelepiped, pl: Placement) -> np.ndarray:
    """The 8 ordered corner coordinates, shape (8, 3), camera-frame meters."""
    h = pp.face_width / 2.0
    front_local = np.array(
        [[-h, -h, 0.0], [h, -h, 0.0], [-h, h, 0.0], [h, h, 0.0]]
    )
    t = np.asarray(pl.t, dtype=float)
    e = np.asarray(pp.extrusion, dtype=float)
    front = front_local + t
    return np.vstack([front, front + e])


def project_corners(cam: PinholeCamera, k3: np.ndarray) -> np.ndarray:
    """Project all 8 corners, order preserved; shape (8, 2) pixels."""
    return project(cam, k3)


def centered_error_2d(a: np.ndarray, b: np.ndarray) -> float:
    """RMS corner distance in pixels after aligning the two sets' centers.

    Each set's mean is subtracted before comparing, so a constant image shift
    between the sets contributes nothing.
    """
    da = a - a.mean(axis=0)
    db = b - b.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum((da - db) ** 2, axis=1))))


def error_3d(a: np.ndarray, b: np.ndarray, mode: str = "root_relative") -> float:
    """RMS corner distance in meters, either absolute or root-relative.

    Root-relative subtracts each set's corner mean first, removing global
    translation; absolute compares raw coordinates.
    """
    if mode == "root_relative":
        a = a - a.mean(axis=0)
        b = b - b.mean(axis=0)
    elif mode != "absolute":
        raise ValueError(f"unknown mode {mode!r}")
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=1))))


def construct_ambiguous(
    reference: tuple[Parallelepiped, Placement], offset: tuple[float, float]
) -> tuple[Parallelepiped, Placement]:
    """Closed-form counterpart at a lateral offset that projects identically
    up to a constant image shift.

    Moving the placement by (dx, dy) shifts the front face's projection
    uniformly by (fx*dx/tz, fy*dy/tz). Shearing the extrusion by
    (dx*ez/tz, dy*ez/tz) gives the back face the same uniform shift, so the
    centered projections of reference and counterpart coincide exactly.
    """
    pp, pl = reference
    dx, dy = offset
    ex, ey, ez = pp.extrusion
    tx, ty, tz = pl.t
    sheared = (ex + dx * ez / tz, ey + dy * ez / tz, ez)
    return (
        replace(pp, extrusion=sheared),
        Placement(t=(tx + dx, ty + dy, tz)),
    )


def root_relative_error_for_offset(
    reference: tuple[Parallelepiped, Placement], offset: tuple[float, float]
) -> float:
    """Root-relative 3D error between a reference and its constructed
    counterpart: (ez / (2*tz)) * hypot(dx, dy)."""
    pp, pl = reference
    return pp.extrusion[2] / (2.0 * pl.t[2]) * math.hypot(*offset)


@dataclass
class MinerConfig:
    """Settings for the Gauss-Newton search over (ex, ey, ez, tx, ty, tz)."""

    tol: float = 0.1  # sub-pixel convergence threshold, px RMS
    max_iters: int = 100
    freeze_txy: bool = False
    freeze_tz: bool = False
    fd_step: float = 1e-7
    initial_damping: float = 1e-3


@dataclass
class MinerResult:
    shape: Parallelepiped
    placement: Placement
    residual_px: float
    converged: bool
    iterations: int


_PARAM_NAMES = ("ex", "ey", "ez", "tx", "ty", "tz")


def mine_ambiguous(
    cam: PinholeCamera,
    reference: tuple[Parallelepiped, Placement],
    init: Placement,
    cfg: MinerConfig | None = None,
) -> MinerResult:
    """Numerically mine a counterpart that matches the reference's centered
    projection, starting from the reference shape placed at `init`.

    Minimizes the 16-component centered reprojection residual over the
    extrusion and placement parameters (placement components optionally
    frozen per cfg) with Levenberg-damped Gauss-Newton: numeric Jacobians by
    central differences, damping doubled on rejected steps and halved on
    accepted ones. Non-convergence is reported in the result, not raised.
    """
    cfg = cfg or MinerConfig()
    pp_ref, pl_ref = reference
    target = project_corners(cam, corners_3d(pp_ref, pl_ref))
    target = target - target.mean(axis=0)

    free = [0, 1, 2]
    if not cfg.freeze_txy:
        free += [3, 4]
    if not cfg.freeze_tz:
        free += [5]
    x_full = np.array([*pp_ref.extrusion, *init.t], dtype=float)

    def residual(xf: np.ndarray) -> np.ndarray:
        x = x_full.copy()
        x[free] = xf
        pp = Parallelepiped(pp_ref.face_width, (x[0], x[1], x[2]))
        pl = Placement(t=(x[3], x[4], x[5]))
        proj = project_corners(cam, corners_3d(pp, pl))
        return (proj - proj.mean(axis=0) - target).ravel()

    def rms(r: np.ndarray) -> float:
        # 8 corners contribute 16 residual components; RMS is per corner.
        return float(np.linalg.norm(r) / math.sqrt(8.0))

    x = x_full[free].copy()
    r = residual(x)
    cost = float(r @ r)
    lam = cfg.initial_damping
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        if rms(r) < cfg.tol:
            break
        jac = np.empty((r.size, len(free)))
        for k in range(len(free)):
            step = np.zeros(len(free))
            step[k] = cfg.fd_step
            jac[:, k] = (residual(x + step) - residual(x - step)) / (2 * cfg.fd_step)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        for _ in range(50):
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(len(free)), -jtr)
            except np.linalg.LinAlgError:
                lam *= 2.0
                continue
            x_new = x + delta
            try:
                r_new = residual(x_new)
            except ValueError:
                # Step left the valid domain (ez or tz <= 0): reject it.
                lam *= 2.0
                continue
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                x, r, cost = x_new, r_new, cost_new
                lam = max(lam / 2.0, 1e-15)
                accepted = True
                break
            lam *= 2.0
        if not accepted:
            break

    full = x_full.copy()
    full[free] = x
    return MinerResult(
        shape=Parallelepiped(pp_ref.face_width, (full[0], full[1], full[2])),
        placement=Placement(t=(full[3], full[4], full[5])),
        residual_px=rms(r),
        converged=rms(r) < cfg.tol,
        iterations=iters,
    )


@dataclass
class AmbiguityRecord:
    """One scatter point: offset, resulting shape and placement, the centered
    2D error, both 3D errors, and the image distance between crop centers."""

    dx: float
    dy: float
    extrusion: tuple[float, float, float]
    t: tuple[float, float, float]
    err2d_centered: float
    err3d_rel: float
    err3d_abs: float
    crop_dist: float


def _record(
    cam: PinholeCamera,
    reference: tuple[Parallelepiped, Placement],
    candidate: tuple[Parallelepiped, Placement],
    dx: float,
    dy: float,
) -> AmbiguityRecord:
    pp_ref, pl_ref = reference
    pp, pl = candidate
    k3_ref = corners_3d(pp_ref, pl_ref)
    k3 = corners_3d(pp, pl)
    k2_ref = project_corners(cam, k3_ref)
    k2 = project_corners(cam, k3)
    c_ref = project(cam, np.asarray(pl_ref.t, dtype=float))
    c = project(cam, np.asarray(pl.t, dtype=float))
    return AmbiguityRecord(
        dx=dx,
        dy=dy,
        extrusion=tuple(pp.extrusion),
        t=tuple(pl.t),
        err2d_centered=centered_error_2d(k2_ref, k2),
        err3d_rel=error_3d(k3_ref, k3, "root_relative"),
        err3d_abs=error_3d(k3_ref, k3, "absolute"),
        crop_dist=float(np.linalg.norm(c - c_ref)),
    )


def sweep_scatter(
    cam: PinholeCamera,
    reference: tuple[Parallelepiped, Placement],
    offsets,
    n_random: int = 0,
    seed: int | None = None,
) -> list[AmbiguityRecord]:
    """One record per offset via the exact construction, optionally followed
    by randomly perturbed (non-ambiguous) instances for scatter context.

    Records appear in the given offset order, then random ones; both are
    deterministic for a fixed seed.
    """
    records = [
        _record(cam, reference, construct_ambiguous(reference, (dx, dy)), dx, dy)
        for dx, dy in offsets
    ]
    if n_random > 0:
        if seed is None:
            raise ValueError("random scatter context requires a seed")
        rng = np.random.default_rng(seed)
        pp_ref, pl_ref = reference
        for _ in range(n_random):
            de = rng.uniform(-0.15, 0.15, size=3)
            dt = rng.uniform(-0.2, 0.2, size=3)
            ez = max(pp_ref.extrusion[2] + de[2], 0.02)
            tz = max(pl_ref.t[2] + dt[2], 0.2)
            cand = (
                Parallelepiped(
                    pp_ref.face_width,
                    (pp_ref.extrusion[0] + de[0], pp_ref.extrusion[1] + de[1], ez),
                ),
                Placement(t=(pl_ref.t[0] + dt[0], pl_ref.t[1] + dt[1], tz)),
            )
            rec = _record(cam, reference, cand, math.nan, math.nan)
            records.append(rec)
    return records


def offset_grid(extent: float, steps: int) -> list[tuple[float, float]]:
    """Square (dx, dy) grid with |dx|, |dy| <= extent, steps per axis."""
    axis = np.linspace(-extent, extent, steps)
    return [(float(dx), float(dy)) for dy in axis for dx in axis]


def circle_distance_for_crop(
    f: float, r: float, crop_width: float, offset_angle: float
) -> float:
    """Distance at which a sphere of radius r, seen at `offset_angle` off
    the optical axis, fills a silhouette of exactly `crop_width`.

    Solves f*(tan(theta+alpha) - tan(theta-alpha)) = crop_width for the
    Euclidean distance d (alpha = asin(r/d)) by bisection to 1e-9. The
    silhouette width decreases monotonically from unbounded (sphere tangent
    to the horizon ray) to zero (infinitely far), so any positive width has
    exactly one solution.

    Raises:
        ValueError: crop_width (or another input) is infeasible.
    """
    if not (f > 0 and r > 0):
        raise ValueError(f"f and r must be positive, got f={f}, r={r}")
    if not (crop_width > 0 and math.isfinite(crop_width)):
        raise ValueError(f"infeasible crop width {crop_width}")
    if not abs(offset_angle) < math.pi / 2:
        raise ValueError(f"offset angle must lie in (-pi/2, pi/2), got {offset_angle}")

    def width(d: float) -> float:
        center = (d * math.sin(offset_angle), 0.0, d * math.cos(offset_angle))
        umin, umax = sphere_silhouette_extent(f, Sphere(center, r))
        return umax - umin

    # Silhouettes are bounded only for d > r/cos(theta); width -> inf there.
    lo = r / math.cos(offset_angle) * (1 + 1e-12)
    hi = max(2 * lo, 2 * r)
    for _ in range(200):
        if width(hi) < crop_width:
            break
        hi *= 2.0
    else:
        raise ValueError(f"infeasible crop width {crop_width}")
    if width(lo) < crop_width:
        raise ValueError(f"infeasible crop width {crop_width}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if width(mid) > crop_width:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    return 0.5 * (lo + hi)
