"""RANSAC plane fitting with total-least-squares refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInput
from .pointcloud import PointCloud

RANSAC_ITERS = 1000
RANSAC_TOL = 0.01  # meters


@dataclass(frozen=True)
class Plane:
    point: np.ndarray  # (3,)
    normal: np.ndarray  # (3,) unit

    def __post_init__(self):
        p = np.asarray(self.point, dtype=np.float64).reshape(3)
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(n)
        if abs(norm - 1.0) > 1e-9:
            raise DegenerateInput(f"plane normal not unit length: {norm}")
        p.flags.writeable = False
        n.flags.writeable = False
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", n)

    def signed_distance(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return (pts - self.point) @ self.normal


def _orient_toward_origin(point: np.ndarray, normal: np.ndarray) -> np.ndarray:
    # Normal points to the side containing the camera origin.
    side = -float(np.dot(normal, point))
    if side < 0:
        return -normal
    if side == 0.0:
        nz = np.nonzero(normal)[0]
        if len(nz) and normal[nz[0]] < 0:
            return -normal
    return normal


def _tls_plane(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centroid = pts.mean(axis=0)
    _, s, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    if s[1] < 1e-12:
        raise DegenerateInput("points are collinear; plane is underdetermined")
    return centroid, vt[2]


def fit_plane_ransac(
    cloud: PointCloud,
    inlier_tol: float = RANSAC_TOL,
    iters: int = RANSAC_ITERS,
    seed: int = 0,
) -> tuple[Plane, np.ndarray]:
    """Fit the plane with the most inliers, then refine it by TLS over them.

    Returns (plane, inlier indices). The normal is oriented toward the
    camera-origin side, and every returned inlier lies within ``inlier_tol``
    of the refined plane. Deterministic for a fixed seed.
    """
    pts = cloud.points
    n = len(pts)
    if n < 3:
        raise DegenerateInput(f"need at least 3 points, got {n}")

    rng = np.random.default_rng(seed)
    tri = rng.integers(0, n, size=(iters, 3))
    a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    normals = np.cross(b - a, c - a)
    lengths = np.linalg.norm(normals, axis=1)
    ok = lengths > 1e-12
    if not ok.any():
        raise DegenerateInput("all sampled triplets collinear")
    normals = normals[ok] / lengths[ok, None]
    anchors = a[ok]

    # |p . n - anchor . n| <= tol, as one matmul per block to bound memory
    block = max(1, 4_000_000 // max(1, n))
    counts = np.empty(len(normals), dtype=np.int64)
    offsets = np.einsum("qd,qd->q", anchors, normals)
    for s in range(0, len(normals), block):
        proj = pts @ normals[s : s + block].T  # (n, block)
        dist = np.abs(proj - offsets[s : s + block][None, :])
        counts[s : s + block] = (dist <= inlier_tol).sum(axis=0)

    best_row = int(np.argmax(counts))
    best_count = int(counts[best_row])
    if best_count < 3:
        raise DegenerateInput("no sampled plane reached 3 inliers")

    dist = np.abs((pts - anchors[best_row]) @ normals[best_row])
    inliers = dist <= inlier_tol
    centroid, normal = _tls_plane(pts[inliers])

    # Recompute inliers against the refined plane so the tolerance holds by
    # construction on the returned set.
    dist = np.abs((pts - centroid) @ normal)
    inlier_idx = np.nonzero(dist <= inlier_tol)[0]
    if len(inlier_idx) >= 3:
        centroid, normal = _tls_plane(pts[inlier_idx])
        dist = np.abs((pts - centroid) @ normal)
        inlier_idx = np.nonzero(dist <= inlier_tol)[0]
    normal = _orient_toward_origin(centroid, normal)
    return Plane(centroid, normal), inlier_idx
