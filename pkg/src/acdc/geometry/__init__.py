"""Point-cloud and planar geometry kernels for matching and scene generation."""

from .boxes import (
    Aabb,
    OrientedBox,
    Polygon2D,
    aabb,
    convex_hull_xy,
    intersection_area,
    project_polygon,
    z_min_obb,
)
from .plane import Plane, fit_plane_ransac
from .pointcloud import PointCloud, dbscan_filter, object_points, unproject

__all__ = [
    "Aabb",
    "OrientedBox",
    "Plane",
    "PointCloud",
    "Polygon2D",
    "aabb",
    "convex_hull_xy",
    "dbscan_filter",
    "fit_plane_ransac",
    "intersection_area",
    "object_points",
    "project_polygon",
    "unproject",
    "z_min_obb",
]
