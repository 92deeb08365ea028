"""Bounding boxes, footprint polygons, and convex polygon clipping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rotation
from ..errors import DegenerateInput, InvalidPolygon
from .pointcloud import PointCloud

_CORNER_SIGNS = np.array(
    [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
)


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if np.any(lo > hi):
            raise DegenerateInput("aabb min exceeds max")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def bottom_left(self) -> np.ndarray:
        """p_BL: the minimum-corner vertex."""
        return self.min

    @property
    def top_right(self) -> np.ndarray:
        """p_TR: the maximum-corner vertex."""
        return self.max


@dataclass(frozen=True)
class OrientedBox:
    """Box with full size ``size``, centered at ``center``, rotated by ``orientation``."""

    center: np.ndarray
    size: np.ndarray
    orientation: np.ndarray  # quaternion (w, x, y, z)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        s = np.asarray(self.size, dtype=np.float64).reshape(3)
        q = rotation.normalize(self.orientation)
        if np.any(s < 0):
            raise DegenerateInput("oriented box has negative size")
        for arr, name in ((c, "center"), (s, "size"), (q, "orientation")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def corners(self) -> np.ndarray:
        local = _CORNER_SIGNS * (0.5 * self.size)
        return self.center + rotation.rotate(self.orientation, local)


@dataclass(frozen=True)
class Polygon2D:
    """Simple polygon, counter-clockwise vertices, in meters."""

    vertices: np.ndarray  # (n, 2)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        if v.shape[0] < 3:
            raise InvalidPolygon(f"need >= 3 vertices, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise InvalidPolygon("non-finite vertex")
        a = _signed_area(v)
        if a == 0.0:
            raise InvalidPolygon("zero-area polygon")
        if a < 0:
            v = v[::-1].copy()
        if _self_intersects(v):
            raise InvalidPolygon("self-intersecting polygon")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    def area(self) -> float:
        return _signed_area(self.vertices)


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _self_intersects(v: np.ndarray) -> bool:
    # Proper crossings between non-adjacent edges; O(n^2), n is small here.
    n = len(v)
    edges = [(v[i], v[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if abs(i - j) in (0, 1) or (i == 0 and j == n - 1):
                continue
            if _proper_cross(*edges[i], *edges[j]):
                return True
    return False


def _proper_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and all(
        d != 0 for d in (d1, d2, d3, d4)
    )


def aabb(cloud: PointCloud) -> Aabb:
    if len(cloud) == 0:
        raise DegenerateInput("empty point cloud")
    return Aabb(cloud.points.min(axis=0), cloud.points.max(axis=0))


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def convex_hull_xy(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of the xy coordinates, CCW, collinear dropped."""
    pts = np.unique(np.asarray(points, dtype=np.float64)[:, :2], axis=0)
    if len(pts) < 3:
        raise DegenerateInput("fewer than 3 distinct xy points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2 and _cross2(out[-1] - out[-2], p - out[-2]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateInput("xy points are collinear")
    return hull


def z_min_obb(cloud: PointCloud) -> tuple[float, Aabb]:
    """Yaw in [-pi/4, pi/4) minimizing the xy footprint area, plus the box
    of the cloud rotated by that yaw (rotating calipers over the xy hull).

    The footprint is invariant under quarter turns, so the yaw is reported in
    a canonical quarter-turn branch; ties prefer the yaw closest to zero.
    """
    if len(cloud) < 3:
        raise DegenerateInput("need >= 3 points for an oriented box")
    hull = convex_hull_xy(cloud.points)
    edges = np.diff(np.vstack([hull, hull[:1]]), axis=0)
    angles = np.arctan2(edges[:, 1], edges[:, 0])

    best: tuple[float, float, float] | None = None
    best_yaw = 0.0
    for phi in angles:
        yaw = _canonical_quarter(-phi)
        c, s = np.cos(yaw), np.sin(yaw)
        rx = c * hull[:, 0] - s * hull[:, 1]
        ry = s * hull[:, 0] + c * hull[:, 1]
        area = float((rx.max() - rx.min()) * (ry.max() - ry.min()))
        key = (area, abs(yaw), yaw)
        if best is None or key < best:
            best = key
            best_yaw = float(yaw)

    c, s = np.cos(best_yaw), np.sin(best_yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    rotated = cloud.points @ rot.T
    return best_yaw, Aabb(rotated.min(axis=0), rotated.max(axis=0))


def _canonical_quarter(angle: float) -> float:
    half_pi = 0.5 * np.pi
    return float((angle + np.pi / 4) % half_pi - np.pi / 4)


def project_polygon(box: Aabb | OrientedBox) -> Polygon2D:
    """Footprint of a box on the xy plane (convex hull of corner projections)."""
    if isinstance(box, Aabb):
        lo, hi = box.min, box.max
        if hi[0] - lo[0] <= 0 or hi[1] - lo[1] <= 0:
            raise DegenerateInput("box has no xy footprint")
        verts = np.array(
            [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
        )
        return Polygon2D(verts)
    corners = box.corners()
    return Polygon2D(convex_hull_xy(corners))


def intersection_area(a: Polygon2D, b: Polygon2D) -> float:
    """Area of the intersection of two convex polygons (Sutherland-Hodgman).

    Symmetric up to floating-point noise; 0.0 when disjoint.
    """
    for poly in (a, b):
        if not _is_convex(poly.vertices):
            raise InvalidPolygon("intersection_area requires convex polygons")
    clipped = _clip(a.vertices, b.vertices)
    if len(clipped) < 3:
        return 0.0
    return abs(_signed_area(np.asarray(clipped)))


def _is_convex(v: np.ndarray) -> bool:
    n = len(v)
    scale = float(np.abs(v).max()) or 1.0
    tol = -1e-12 * scale * scale
    for i in range(n):
        a, b, c = v[i], v[(i + 1) % n], v[(i + 2) % n]
        if _cross2(b - a, c - b) < tol:
            return False
    return True


def _clip(subject: np.ndarray, clip_poly: np.ndarray) -> list:
    """Clip a polygon by a convex CCW clip polygon."""
    output = [tuple(p) for p in subject]
    cp1 = tuple(clip_poly[-1])
    for cp2 in (tuple(p) for p in clip_poly):
        if not output:
            return []
        inputs = output
        output = []

        def inside(p):
            return (cp2[0] - cp1[0]) * (p[1] - cp1[1]) - (cp2[1] - cp1[1]) * (
                p[0] - cp1[0]
            ) >= 0.0

        def intersect(s, e):
            dc = (cp1[0] - cp2[0], cp1[1] - cp2[1])
            dp = (s[0] - e[0], s[1] - e[1])
            n1 = cp1[0] * cp2[1] - cp1[1] * cp2[0]
            n2 = s[0] * e[1] - s[1] * e[0]
            den = dc[0] * dp[1] - dc[1] * dp[0]
            return ((n1 * dp[0] - n2 * dc[0]) / den, (n1 * dp[1] - n2 * dc[1]) / den)

        s = inputs[-1]
        for e in inputs:
            if inside(e):
                if not inside(s):
                    output.append(intersect(s, e))
                output.append(e)
            elif inside(s):
                output.append(intersect(s, e))
            s = e
        cp1 = cp2
    return output
