"""Lane graph: centreline polylines with width and successor/neighbour links."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import cumulative_arclength, interpolate_polyline, project_to_polyline

MAX_POINT_SPACING = 5.0
MIN_LANE_WIDTH = 2.0


@dataclass(frozen=True)
class Lane:
    id: str
    points: np.ndarray
    width: float = 3.5
    successors: tuple[str, ...] = ()
    left: str | None = None
    right: str | None = None
    # arc-length positions of stop lines along this lane
    stop_lines: tuple[float, ...] = ()

    @property
    def length(self) -> float:
        return float(cumulative_arclength(self.points)[-1])

    def pose_at(self, s: float) -> tuple[np.ndarray, float]:
        return interpolate_polyline(self.points, s)

    def project(self, p) -> tuple[float, float]:
        s, d, _ = project_to_polyline(self.points, p)
        return s, d


def line_points(start, end, spacing: float = 1.0) -> np.ndarray:
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    n = max(1, math.ceil(np.linalg.norm(end - start) / spacing))
    t = np.linspace(0.0, 1.0, n + 1)
    return start + t[:, None] * (end - start)


def arc_points(center, radius: float, start_angle: float, end_angle: float, spacing: float = 0.5) -> np.ndarray:
    """Points on a circular arc; travel is counter-clockwise iff ``end_angle > start_angle``."""
    n = max(2, math.ceil(abs(end_angle - start_angle) * radius / spacing))
    ang = np.linspace(start_angle, end_angle, n + 1)
    cx, cy = center
    return np.stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)], axis=1)


class LaneGraphError(ValueError):
    pass


@dataclass
class LaneGraph:
    lanes: dict[str, Lane] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for lane in self.lanes.values():
            if lane.width <= MIN_LANE_WIDTH:
                raise LaneGraphError(f"lane {lane.id!r}: width {lane.width} must exceed {MIN_LANE_WIDTH} m")
            if len(lane.points) < 2:
                raise LaneGraphError(f"lane {lane.id!r}: needs at least 2 centreline points")
            gaps = np.linalg.norm(np.diff(lane.points, axis=0), axis=1)
            if gaps.max() > MAX_POINT_SPACING + 1e-9:
                raise LaneGraphError(f"lane {lane.id!r}: centreline spacing {gaps.max():.2f} m exceeds {MAX_POINT_SPACING} m")
            for ref in (*lane.successors, lane.left, lane.right):
                if ref is not None and ref not in self.lanes:
                    raise LaneGraphError(f"lane {lane.id!r}: unknown lane reference {ref!r}")
            if lane.left is not None and self.lanes[lane.left].right != lane.id:
                raise LaneGraphError(f"lane {lane.id!r}: left neighbour {lane.left!r} does not list it as right")
            if lane.right is not None and self.lanes[lane.right].left != lane.id:
                raise LaneGraphError(f"lane {lane.id!r}: right neighbour {lane.right!r} does not list it as left")

    def __getitem__(self, lane_id: str) -> Lane:
        return self.lanes[lane_id]

    def __iter__(self):
        return iter(self.lanes.values())

    def __len__(self) -> int:
        return len(self.lanes)

    def locate(self, p, heading: float | None = None) -> tuple[Lane, float, float]:
        """Nearest lane to ``p`` as ``(lane, s, d)``.

        When ``heading`` is given, lanes whose direction differs by more than
        90 degrees are skipped unless nothing else is within reach.
        """
        best = None
        for lane in self.lanes.values():
            s, d = lane.project(p)
            score = abs(d)
            if heading is not None:
                _, lh = lane.pose_at(s)
                if math.cos(lh - heading) < 0.0:
                    score += 1e3
            # points past the lane ends are penalised by their overshoot
            over = max(0.0, -s, s - lane.length)
            score += over
            if best is None or score < best[0]:
                best = (score, lane, s, d)
        if best is None:
            raise LaneGraphError("empty lane graph")
        return best[1], best[2], best[3]

    def on_any_lane(self, p, margin: float = 0.0) -> bool:
        """Whether ``p`` lies within ``width / 2 + margin`` of some centreline."""
        for lane in self.lanes.values():
            s, d, _ = project_to_polyline(lane.points, p)
            pt, _ = lane.pose_at(s)
            dist = float(np.hypot(*(np.asarray(p, dtype=float) - pt)))
            if dist <= lane.width / 2.0 + margin:
                return True
        return False
