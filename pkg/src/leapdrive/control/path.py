"""Dense reference paths at ~1 m spacing and the Frenet frame they induce."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..sim.geometry import cumulative_arclength, project_to_polyline
from ..sim.lanes import LaneGraph

NOMINAL_SPACING = 1.0


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class FrenetState:
    s: float
    s_d: float = 0.0
    s_dd: float = 0.0
    d: float = 0.0
    d_d: float = 0.0
    d_dd: float = 0.0
    # time to reach this state when used as a planning target
    t: float = 5.0


@dataclass(frozen=True)
class DensePath:
    points: np.ndarray
    s: np.ndarray
    lane_ids: tuple[str, ...]
    left_available: np.ndarray
    right_available: np.ndarray
    lane_width: float = 3.5

    def __post_init__(self):
        if len(self.points) < 2:
            raise PathError("dense path needs at least 2 points")
        if np.any(np.diff(self.s) <= 0):
            raise PathError("arc-length must be strictly increasing")
        seg = np.diff(self.points, axis=0)
        seg = seg / np.linalg.norm(seg, axis=1, keepdims=True)
        # vertex tangents: mean of the adjacent segment directions
        tang = np.empty_like(self.points)
        tang[0] = seg[0]
        tang[-1] = seg[-1]
        tang[1:-1] = seg[:-1] + seg[1:]
        tang /= np.linalg.norm(tang, axis=1, keepdims=True)
        object.__setattr__(self, "_tangents", tang)

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def __len__(self) -> int:
        return len(self.points)

    def frames(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Reference points and unit tangents at arc-lengths ``s`` (vectorised).

        Tangents are blended linearly between vertices, which makes the
        frame continuous; outside the path the end segments are extended.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        n = len(self.points)
        i = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, n - 2)
        u = (s - self.s[i]) / (self.s[i + 1] - self.s[i])
        c = self.points[i] + u[:, None] * (self.points[i + 1] - self.points[i])
        uc = np.clip(u, 0.0, 1.0)[:, None]
        t = (1.0 - uc) * self._tangents[i] + uc * self._tangents[i + 1]
        t[s < self.s[0]] = self._tangents[0]
        t[s > self.s[-1]] = self._tangents[-1]
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        return c, t

    def frame(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        c, t = self.frames(s)
        return c[0], t[0]

    def lane_at(self, s: float) -> int:
        return int(np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.points) - 1))

    def has_adjacent(self, s: float, side: str) -> bool:
        i = self.lane_at(s)
        arr = self.left_available if side == "left" else self.right_available
        return bool(arr[i])


def _resample(points: np.ndarray, lane_of_vertex: list[str], graph: LaneGraph | None, spacing: float) -> DensePath:
    cum = cumulative_arclength(points)
    total = cum[-1]
    if total <= 0:
        raise PathError("path has zero length")
    n = max(1, int(round(total / spacing)))
    s_new = np.linspace(0.0, total, n + 1)
    x = np.interp(s_new, cum, points[:, 0])
    y = np.interp(s_new, cum, points[:, 1])
    pts = np.stack([x, y], axis=1)
    idx = np.clip(np.searchsorted(cum, s_new, side="right") - 1, 0, len(points) - 1)
    lane_ids = tuple(lane_of_vertex[i] for i in idx)
    if graph is not None:
        left = np.array([graph[l].left is not None for l in lane_ids])
        right = np.array([graph[l].right is not None for l in lane_ids])
        width = graph[lane_ids[0]].width
    else:
        left = np.zeros(len(pts), bool)
        right = np.zeros(len(pts), bool)
        width = 3.5
    # chord lengths are what callers see as spacing
    s_out = cumulative_arclength(pts)
    return DensePath(pts, s_out, lane_ids, left, right, width)


def _lane_piece(graph: LaneGraph, lane_id: str, s_from: float, s_to: float) -> np.ndarray:
    lane = graph[lane_id]
    cum = cumulative_arclength(lane.points)
    s_from = float(np.clip(s_from, 0.0, cum[-1]))
    s_to = float(np.clip(s_to, 0.0, cum[-1]))
    inner = lane.points[(cum > s_from) & (cum < s_to)]
    a, _ = lane.pose_at(s_from)
    b, _ = lane.pose_at(s_to)
    return np.vstack([a, inner, b])


def _successor_route(graph: LaneGraph, start: str, goal: str) -> list[str]:
    prev = {start: None}
    q = deque([start])
    while q:
        cur = q.popleft()
        if cur == goal and cur != start:
            break
        for nxt in graph[cur].successors:
            if nxt not in prev:
                prev[nxt] = cur
                q.append(nxt)
    if goal not in prev or goal == start:
        raise PathError(f"no successor chain from lane {start!r} to {goal!r}")
    out = [goal]
    while prev[out[-1]] is not None:
        out.append(prev[out[-1]])
    return out[::-1]


def densify(waypoints, graph: LaneGraph, spacing: float = NOMINAL_SPACING, extend: float = 0.0) -> DensePath:
    """Interpolate sparse waypoints along lane centrelines at ~``spacing`` metres.

    The route follows successor links between waypoint lanes. ``extend``
    continues the path past the last waypoint (along successors, then
    straight) so planners have a horizon beyond the goal.
    """
    wps = np.asarray(waypoints, dtype=float)
    if wps.ndim != 2 or len(wps) < 2:
        raise PathError("densify needs at least 2 waypoints")
    located = []
    for i, wp in enumerate(wps):
        lane, s, d = graph.locate(wp)
        if abs(d) > lane.width / 2.0 + 0.5 or s < -0.5 or s > lane.length + 0.5:
            raise PathError(f"waypoint {i} at ({wp[0]:g}, {wp[1]:g}) is not on any lane")
        located.append((lane.id, s))

    pieces: list[np.ndarray] = []
    owners: list[str] = []

    def add(lane_id, a, b):
        piece = _lane_piece(graph, lane_id, a, b)
        if pieces:
            piece = piece[1:]
        pieces.append(piece)
        owners.extend([lane_id] * len(piece))

    for (la, sa), (lb, sb) in zip(located[:-1], located[1:]):
        if la == lb and sb >= sa:
            add(la, sa, sb)
            continue
        chain = _successor_route(graph, la, lb)
        add(la, sa, graph[la].length)
        for mid in chain[1:-1]:
            add(mid, 0.0, graph[mid].length)
        add(lb, 0.0, sb)

    if extend > 0:
        lane_id, s_end = located[-1]
        remaining = extend
        lane = graph[lane_id]
        take = min(remaining, lane.length - s_end)
        if take > 1e-6:
            add(lane_id, s_end, s_end + take)
            remaining -= take
        while remaining > 1e-6 and lane.successors:
            lane = graph[lane.successors[0]]
            take = min(remaining, lane.length)
            add(lane.id, 0.0, take)
            remaining -= take
        if remaining > 1e-6:
            pts = np.vstack(pieces)
            direction = pts[-1] - pts[-2]
            direction /= np.linalg.norm(direction)
            n = math.ceil(remaining)
            tail = pts[-1] + np.outer(np.linspace(remaining / n, remaining, n), direction)
            pieces.append(tail)
            owners.extend([owners[-1]] * n)

    pts = np.vstack(pieces)
    keep = np.concatenate([[True], np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-9])
    pts = pts[keep]
    owners = [o for o, k in zip(owners, keep) if k]
    return _resample(pts, owners, graph, spacing)


def shift_path(path: DensePath, offset: float, lane_ids: tuple[str, ...] | None = None) -> DensePath:
    """Parallel path ``offset`` metres to the left (negative: right)."""
    normals = np.stack([-path._tangents[:, 1], path._tangents[:, 0]], axis=1)
    pts = path.points + offset * normals
    s = cumulative_arclength(pts)
    return DensePath(
        pts, s, lane_ids or path.lane_ids, path.left_available, path.right_available, path.lane_width
    )


def frenet_project(path: DensePath, x: float, y: float, heading: float = 0.0, speed: float = 0.0,
                   accel: float = 0.0, max_offset: float | None = None) -> FrenetState:
    """World pose to Frenet state (left-positive lateral offset)."""
    p = np.array([x, y], dtype=float)
    s0, d0, _ = project_to_polyline(path.points, p)
    limit = 2.0 * path.lane_width if max_offset is None else max_offset
    if abs(d0) > limit:
        raise PathError(f"pose ({x:.2f}, {y:.2f}) is {abs(d0):.2f} m from the path (limit {limit:.2f} m)")

    def f(s):
        c, t = path.frame(s)
        return float(np.dot(p - c, t))

    s = s0
    lo, hi = s0 - 1.5 * NOMINAL_SPACING, s0 + 1.5 * NOMINAL_SPACING
    flo, fhi = f(lo), f(hi)
    if flo * fhi < 0:
        s = brentq(f, lo, hi, xtol=1e-12, rtol=1e-14)
    c, t = path.frame(s)
    n = np.array([-t[1], t[0]])
    d = float(np.dot(p - c, n))
    dpsi = heading - math.atan2(t[1], t[0])
    return FrenetState(
        s=float(s),
        s_d=speed * math.cos(dpsi),
        s_dd=accel * math.cos(dpsi),
        d=d,
        d_d=speed * math.sin(dpsi),
        d_dd=accel * math.sin(dpsi),
    )


def frenet_to_world(path: DensePath, s, d) -> np.ndarray:
    """Map arrays of ``(s, d)`` to world ``(x, y)`` points, shape ``(n, 2)``."""
    c, t = path.frames(s)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    return c + d[:, None] * np.stack([-t[:, 1], t[:, 0]], axis=1)
