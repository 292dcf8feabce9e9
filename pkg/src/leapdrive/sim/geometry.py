"""Planar geometry helpers: polylines, oriented rectangles, angle wrapping."""

from __future__ import annotations

import math

import numpy as np


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def cumulative_arclength(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def project_to_polyline(points: np.ndarray, p) -> tuple[float, float, int]:
    """Closest point on a polyline.

    Returns ``(s, signed lateral offset, segment index)``; the offset is
    positive to the left of the direction of travel. Projections are
    clamped to the polyline ends.
    """
    p = np.asarray(p, dtype=float)
    a = points[:-1]
    b = points[1:]
    ab = b - a
    len2 = np.einsum("ij,ij->i", ab, ab)
    len2 = np.where(len2 == 0.0, 1e-12, len2)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / len2, 0.0, 1.0)
    proj = a + t[:, None] * ab
    dist2 = np.einsum("ij,ij->i", p - proj, p - proj)
    i = int(np.argmin(dist2))
    s0 = cumulative_arclength(points)[i]
    seg_len = math.sqrt(len2[i])
    cross = ab[i, 0] * (p[1] - a[i, 1]) - ab[i, 1] * (p[0] - a[i, 0])
    d = math.copysign(math.sqrt(dist2[i]), cross) if dist2[i] > 0 else 0.0
    return float(s0 + t[i] * seg_len), float(d), i


def point_to_polyline_distance(points: np.ndarray, p) -> float:
    _, d, _ = project_to_polyline(points, p)
    return abs(d)


def interpolate_polyline(points: np.ndarray, s: float) -> tuple[np.ndarray, float]:
    """Point and heading at arc-length ``s`` (clamped, linear extrapolation beyond ends)."""
    cum = cumulative_arclength(points)
    i = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(points) - 2))
    seg = points[i + 1] - points[i]
    L = float(np.hypot(*seg))
    u = (s - cum[i]) / L if L > 0 else 0.0
    return points[i] + u * seg, math.atan2(seg[1], seg[0])


def rect_corners(x: float, y: float, heading: float, half_length: float, half_width: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    fwd = np.array([c, s]) * half_length
    left = np.array([-s, c]) * half_width
    centre = np.array([x, y])
    return np.array([centre + fwd + left, centre - fwd + left, centre - fwd - left, centre + fwd - left])


def _axes(heading):
    c, s = np.cos(heading), np.sin(heading)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def rect_separation(a, b) -> np.ndarray:
    """Separating-axis gap between oriented rectangles, vectorised over leading dims.

    ``a`` and ``b`` are arrays ``(..., 5)`` of ``(x, y, heading, half_length, half_width)``.
    A negative value means overlap; positive values are a lower bound on the
    true distance between the two footprints.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    centre_delta = b[..., :2] - a[..., :2]
    ax_a = _axes(a[..., 2])
    ax_b = _axes(b[..., 2])
    axes = np.concatenate([ax_a, ax_b], axis=-2)  # (..., 4, 2)

    def radius(r, ax_r):
        # projection half-extent of rectangle r on each axis
        h = r[..., 3:5]
        proj = np.abs(np.einsum("...kj,...mj->...km", axes, ax_r))
        return np.einsum("...km,...m->...k", proj, h)

    dist = np.abs(np.einsum("...kj,...j->...k", axes, centre_delta))
    gap = dist - radius(a, ax_a) - radius(b, ax_b)
    return gap.max(axis=-1)


def rects_overlap(a, b) -> bool:
    return bool(rect_separation(a, b) < 0.0)
