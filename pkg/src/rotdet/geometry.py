"""Rotated-rectangle geometry: polygons, exact IoU, a raster oracle, NMS.

The exact IoU route clips one box's polygon against the other
(Sutherland-Hodgman) and measures areas with the shoelace formula. The
independent raster oracle rates the same pair by point-in-box tests over a
uniform grid, so the two can cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle (cx, cy, w, h, theta) with class id and score.

    Construction canonicalizes: theta is wrapped into [0, 2*pi) and the
    (w, h, theta) <-> (h, w, theta + pi/2) ambiguity is resolved by
    preferring w >= h. Both raw forms describe the same polygon.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float
    class_id: int = 0
    score: float = 1.0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive: w={self.w}, h={self.h}")
        w, h, theta = self.w, self.h, self.theta
        if w < h:
            w, h = h, w
            theta += 0.5 * math.pi
        theta %= TWO_PI
        object.__setattr__(self, "w", float(w))
        object.__setattr__(self, "h", float(h))
        object.__setattr__(self, "theta", float(theta))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))


def box_to_polygon(b: OrientedBox) -> np.ndarray:
    """Four CCW vertices (positive shoelace area) of the box, shape (4, 2)."""
    c, s = math.cos(b.theta), math.sin(b.theta)
    hw, hh = 0.5 * b.w, 0.5 * b.h
    local = np.array([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)])
    rot = np.array([(c, -s), (s, c)])
    return local @ rot.T + np.array([b.cx, b.cy])


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area; positive for CCW vertex order."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex CCW subject by a convex CCW clipper.

    Collinear and touching edges count as inside, which yields zero-area
    intersections instead of degenerate geometry.
    """
    output = [tuple(p) for p in subject]
    m = len(clipper)
    for i in range(m):
        if not output:
            break
        a = clipper[i]
        b = clipper[(i + 1) % m]
        ex, ey = b[0] - a[0], b[1] - a[1]
        inputs = output
        output = []
        for j in range(len(inputs)):
            p = inputs[j]
            q = inputs[(j + 1) % len(inputs)]
            dp = ex * (p[1] - a[1]) - ey * (p[0] - a[0])
            dq = ex * (q[1] - a[1]) - ey * (q[0] - a[0])
            p_in = dp >= 0.0
            q_in = dq >= 0.0
            if p_in:
                output.append(p)
            if p_in != q_in:
                t = dp / (dp - dq)
                output.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return np.array(output) if output else np.empty((0, 2))


def rotated_iou(a: OrientedBox, b: OrientedBox) -> float:
    """Exact intersection-over-union of two rotated rectangles, in [0, 1]."""
    pa, pb = box_to_polygon(a), box_to_polygon(b)
    inter_poly = clip_convex(pa, pb)
    inter = abs(polygon_area(inter_poly)) if len(inter_poly) >= 3 else 0.0
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def _points_in_box(px: np.ndarray, py: np.ndarray, b: OrientedBox) -> np.ndarray:
    c, s = math.cos(b.theta), math.sin(b.theta)
    dx, dy = px - b.cx, py - b.cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (np.abs(u) <= 0.5 * b.w) & (np.abs(v) <= 0.5 * b.h)


def raster_iou_oracle(a: OrientedBox, b: OrientedBox, grid: int = 1024) -> float:
    """Brute-force IoU over a uniform grid covering both boxes' extent."""
    if grid < 256:
        raise ValueError("grid must be at least 256")
    corners = np.vstack([box_to_polygon(a), box_to_polygon(b)])
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    xs = np.linspace(lo[0], hi[0], grid)
    ys = np.linspace(lo[1], hi[1], grid)
    px, py = np.meshgrid(xs, ys)
    in_a = _points_in_box(px, py, a)
    in_b = _points_in_box(px, py, b)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def rotated_nms(boxes: list[OrientedBox], iou_threshold: float) -> list[OrientedBox]:
    """Greedy descending-score suppression with a stable tie-break.

    Ordering key: score desc, then class_id asc, cx asc, cy asc. A box is
    dropped when its IoU with an already kept box exceeds the threshold.
    """
    ordered = sorted(boxes, key=lambda b: (-b.score, b.class_id, b.cx, b.cy))
    kept: list[OrientedBox] = []
    for cand in ordered:
        if all(rotated_iou(cand, k) <= iou_threshold for k in kept):
            kept.append(cand)
    return kept


# -- annotation file format ---------------------------------------------------
# One object per line: "cx cy w h theta class_id"; '#' starts a comment.


def save_annotations(path, boxes: list[OrientedBox]) -> None:
    with open(path, "w") as fh:
        fh.write("# cx cy w h theta class_id\n")
        for b in boxes:
            fh.write(f"{b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f} "
                     f"{b.theta:.9f} {b.class_id}\n")


def load_annotations(path) -> list[OrientedBox]:
    boxes = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"bad annotation line: {line!r}")
            cx, cy, w, h, theta = map(float, parts[:5])
            boxes.append(OrientedBox(cx, cy, w, h, theta, class_id=int(parts[5])))
    return boxes
