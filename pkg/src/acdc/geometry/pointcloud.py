"""Point-cloud kernels: depth unprojection, mask selection, density filtering."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..errors import DegenerateInput, ShapeMismatch

log = logging.getLogger(__name__)

DBSCAN_MIN_PTS = 10
# Auto eps: this multiple of the median distance to the 4th nearest neighbor.
DBSCAN_AUTO_SCALE = 2.0


@dataclass(frozen=True)
class PointCloud:
    """Points in meters. ``pixels`` holds flat row-major pixel indices when the
    cloud was unprojected from a depth map, enabling mask lookups."""

    points: np.ndarray  # (n, 3) float64
    pixels: np.ndarray | None = None  # (n,) int64 flat indices, optional

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise DegenerateInput("point cloud contains non-finite coordinates")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.pixels is not None:
            px = np.asarray(self.pixels, dtype=np.int64).reshape(-1)
            if px.shape[0] != pts.shape[0]:
                raise ShapeMismatch("pixel index count differs from point count")
            px.flags.writeable = False
            object.__setattr__(self, "pixels", px)

    def __len__(self) -> int:
        return int(self.points.shape[0])


def unproject(depth, intrinsics) -> PointCloud:
    """Lift a depth map to a camera-frame point cloud (+z forward).

    One point per valid depth pixel: x=(u-cx)*z/fx, y=(v-cy)*z/fy, z=depth.
    """
    values = np.asarray(depth.values, dtype=np.float64)
    valid = np.asarray(depth.valid, dtype=bool)
    h, w = values.shape
    if (h, w) != (intrinsics.height, intrinsics.width):
        raise ShapeMismatch(
            f"depth grid {h}x{w} does not match intrinsics "
            f"{intrinsics.height}x{intrinsics.width}"
        )
    vv, uu = np.nonzero(valid)
    z = values[vv, uu]
    x = (uu - intrinsics.cx) * z / intrinsics.fx
    y = (vv - intrinsics.cy) * z / intrinsics.fy
    pixels = vv * w + uu
    return PointCloud(np.column_stack([x, y, z]), pixels)


def object_points(cloud: PointCloud, mask) -> PointCloud:
    """Subset of an unprojected cloud whose pixels are masked and depth-valid."""
    if cloud.pixels is None:
        raise ShapeMismatch("cloud carries no pixel indices; unproject() first")
    mask = np.asarray(mask, dtype=bool)
    flat = mask.reshape(-1)
    keep = flat[cloud.pixels]
    if not keep.any():
        log.warning("object mask covers no valid depth pixels; empty point set")
    return PointCloud(cloud.points[keep], cloud.pixels[keep])


def _auto_eps(points: np.ndarray) -> float:
    k = min(5, len(points))  # self + 4 neighbors
    tree = cKDTree(points)
    dists, _ = tree.query(points, k=k)
    return DBSCAN_AUTO_SCALE * float(np.median(dists[:, -1]))


def dbscan_filter(
    cloud: PointCloud,
    eps: float | None = None,
    min_pts: int = DBSCAN_MIN_PTS,
) -> PointCloud:
    """Keep the largest density cluster of the cloud (noise removal).

    Standard density-reachability semantics with two deterministic choices:
    border points join their nearest core point's cluster, and size ties
    between clusters go to the one with the smaller centroid depth (then
    lexicographically smaller centroid). Returns the input unchanged, with a
    warning, when every point is noise. eps=None picks a scale-adaptive value
    from the median 4th-nearest-neighbor distance.
    """
    n = len(cloud)
    if n == 0:
        raise DegenerateInput("empty point cloud")
    pts = cloud.points
    if eps is None:
        eps = _auto_eps(pts)
    if eps <= 0:
        raise DegenerateInput("eps must be positive")

    tree = cKDTree(pts)
    counts = tree.query_ball_point(pts, r=eps, return_length=True)
    core = counts >= min_pts
    if not core.any():
        log.warning("dbscan: every point classified as noise; cloud kept unchanged")
        return cloud

    core_idx = np.nonzero(core)[0]
    core_tree = cKDTree(pts[core_idx])
    pairs = core_tree.query_pairs(eps, output_type="ndarray")
    n_core = len(core_idx)
    if len(pairs):
        adj = sparse.coo_matrix(
            (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n_core, n_core)
        )
        _, comp = connected_components(adj, directed=False)
    else:
        comp = np.arange(n_core)

    labels = np.full(n, -1, dtype=np.int64)
    labels[core_idx] = comp

    noncore_idx = np.nonzero(~core)[0]
    if len(noncore_idx):
        d, j = core_tree.query(pts[noncore_idx], k=1, distance_upper_bound=eps)
        reach = np.isfinite(d)
        labels[noncore_idx[reach]] = comp[j[reach]]

    member = labels >= 0
    ids, sizes = np.unique(labels[member], return_counts=True)
    best = None
    for cid, size in zip(ids, sizes):
        centroid = pts[labels == cid].mean(axis=0)
        key = (-size, centroid[2], centroid[0], centroid[1])
        if best is None or key < best[0]:
            best = (key, cid)
    keep = labels == best[1]
    pixels = cloud.pixels[keep] if cloud.pixels is not None else None
    return PointCloud(pts[keep], pixels)
