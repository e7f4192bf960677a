"""Minimal SVG wireframe rendering of parallelepiped instances.

Each instance gets a column of three panels: the pinhole camera's view of the
placed solid, and two orthographic views of the centered shape from fixed
azimuths (+/-30 degrees about the vertical axis). No hidden-line removal.
"""

from __future__ import annotations

import math

import numpy as np

from .ambiguity import Parallelepiped, Placement, corners_3d, project_corners
from .geometry import PinholeCamera

# Corner index pairs forming the 12 edges (front face, back face, sides).
EDGES = (
    (0, 1), (1, 3), (3, 2), (2, 0),
    (4, 5), (5, 7), (7, 6), (6, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)

ORTHO_AZIMUTHS_DEG = (30.0, -30.0)

_PANEL_W = 200.0
_PANEL_H = 160.0
_MARGIN = 14.0


def _ortho_project(k3: np.ndarray, azimuth_deg: float) -> np.ndarray:
    """Center the corners and view them orthographically from the azimuth."""
    a = math.radians(azimuth_deg)
    c = k3 - k3.mean(axis=0)
    x = c[:, 0] * math.cos(a) + c[:, 2] * math.sin(a)
    y = c[:, 1]
    return np.stack([x, y], axis=1)


def _fit(points: np.ndarray, bounds: tuple[float, float, float, float], ox: float, oy: float):
    """Map points into a panel at offset (ox, oy), preserving aspect."""
    x0, y0, x1, y1 = bounds
    sw = (_PANEL_W - 2 * _MARGIN) / max(x1 - x0, 1e-12)
    sh = (_PANEL_H - 2 * _MARGIN) / max(y1 - y0, 1e-12)
    s = min(sw, sh)
    px = ox + _MARGIN + (points[:, 0] - x0) * s
    py = oy + _MARGIN + (points[:, 1] - y0) * s
    return np.stack([px, py], axis=1)


def _edge_lines(p2: np.ndarray, color: str) -> list[str]:
    lines = []
    for i, j in EDGES:
        lines.append(
            f'<line x1="{p2[i, 0]:.2f}" y1="{p2[i, 1]:.2f}" '
            f'x2="{p2[j, 0]:.2f}" y2="{p2[j, 1]:.2f}" '
            f'stroke="{color}" stroke-width="1.2"/>'
        )
    return lines


def render_instances_svg(
    cam: PinholeCamera,
    instances: list[tuple[Parallelepiped, Placement]],
    labels: list[str] | None = None,
) -> str:
    """SVG document showing each instance's camera view and two orthographic
    shape views; the first instance is treated as the reference (green)."""
    if labels is None:
        labels = [f"instance {i}" for i in range(len(instances))]
    n = len(instances)
    rows = 1 + len(ORTHO_AZIMUTHS_DEG)
    width = n * _PANEL_W
    height = rows * _PANEL_H + 18.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    # Common bounds per orthographic row so shape sizes stay comparable.
    ortho2d = [
        [_ortho_project(corners_3d(pp, pl), az) for pp, pl in instances]
        for az in ORTHO_AZIMUTHS_DEG
    ]
    ortho_bounds = []
    for row in ortho2d:
        allp = np.vstack(row)
        ortho_bounds.append(
            (allp[:, 0].min(), allp[:, 1].min(), allp[:, 0].max(), allp[:, 1].max())
        )
    img_bounds = (0.0, 0.0, float(cam.width), float(cam.height))
    for col, (pp, pl) in enumerate(instances):
        color = "#2e8b57" if col == 0 else "#1f4fa0"
        ox = col * _PANEL_W
        cam_pts = _fit(project_corners(cam, corners_3d(pp, pl)), img_bounds, ox, 0.0)
        parts.append(
            f'<rect x="{ox + _MARGIN:.2f}" y="{_MARGIN:.2f}" '
            f'width="{_PANEL_W - 2 * _MARGIN:.2f}" height="{_PANEL_H - 2 * _MARGIN:.2f}" '
            'fill="none" stroke="#bbbbbb" stroke-width="0.5"/>'
        )
        parts.extend(_edge_lines(cam_pts, color))
        for r, az in enumerate(ORTHO_AZIMUTHS_DEG):
            oy = (1 + r) * _PANEL_H
            pts = _fit(ortho2d[r][col], ortho_bounds[r], ox, oy)
            parts.extend(_edge_lines(pts, color))
        parts.append(
            f'<text x="{ox + _PANEL_W / 2:.2f}" y="{height - 5:.2f}" '
            f'text-anchor="middle" font-size="11" font-family="sans-serif">'
            f"{labels[col]}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
