"""Geometric affordances on articulated assets: handle localization by ray
casting and analytical open/close trajectories for the handle frame.

The end-effector offset is the consumer's business; trajectories describe the
handle frame only.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rotation
from .bundle.types import JointSpec
from .errors import DegenerateRadius, MissingFile, NoHit, ShapeMismatch

RAY_GRID = 64  # rays per side of the sampling grid
HANDLE_DEPTH_TOL = 5e-3  # hits within this of the closest hit form the handle


@dataclass(frozen=True)
class LinkMesh:
    """Triangle soup for one link, in the asset frame."""

    link_id: str
    triangles: np.ndarray  # (t, 3, 3) float64
    joint: JointSpec

    def __post_init__(self):
        tri = np.asarray(self.triangles, dtype=np.float64)
        if tri.ndim != 3 or tri.shape[1:] != (3, 3) or tri.shape[0] == 0:
            raise ShapeMismatch(f"link {self.link_id!r}: expected (t, 3, 3) triangles")
        if not np.all(np.isfinite(tri)):
            raise ShapeMismatch(f"link {self.link_id!r}: non-finite vertex")
        tri = np.ascontiguousarray(tri)
        tri.flags.writeable = False
        object.__setattr__(self, "triangles", tri)


@dataclass(frozen=True)
class HandleEstimate:
    location: np.ndarray  # (3,)
    hit_count: int
    protrusion_depth: float

    def __post_init__(self):
        loc = np.asarray(self.location, dtype=np.float64).reshape(3)
        loc.flags.writeable = False
        object.__setattr__(self, "location", loc)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly timed 6-DoF waypoints for the handle frame."""

    positions: np.ndarray  # (n, 3)
    orientations: np.ndarray  # (n, 4) unit quaternions

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        q = np.asarray(self.orientations, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3 or q.shape != (p.shape[0], 4):
            raise ShapeMismatch("trajectory arrays must be (n, 3) and (n, 4)")
        if p.shape[0] < 2:
            raise ShapeMismatch("trajectory needs at least 2 waypoints")
        p.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "orientations", q)

    def __len__(self) -> int:
        return int(self.positions.shape[0])

    def reversed(self) -> "Trajectory":
        return Trajectory(self.positions[::-1].copy(), self.orientations[::-1].copy())


def read_tri_mesh(path: str | os.PathLike) -> np.ndarray:
    """Indexed-triangle text: `v x y z` vertex lines, `t i j k` 0-based faces,
    `#` comments. Returns (t, 3, 3) float64."""
    p = Path(path)
    if not p.exists():
        raise MissingFile(str(p))
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    for ln, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v" and len(parts) == 4:
            verts.append([float(x) for x in parts[1:]])
        elif parts[0] == "t" and len(parts) == 4:
            faces.append([int(x) for x in parts[1:]])
        else:
            raise ShapeMismatch(f"{p.name}:{ln}: unrecognized mesh line {line!r}")
    v = np.asarray(verts, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64)
    if len(f) == 0:
        raise ShapeMismatch(f"{p.name}: mesh has no faces")
    if f.min() < 0 or f.max() >= len(v):
        raise ShapeMismatch(f"{p.name}: face index out of range")
    return v[f]


def _ray_triangle_hits(origins: np.ndarray, direction: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Nearest hit distance per ray (np.inf when missed); Moller-Trumbore,
    vectorized over rays x triangles."""
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.cross(direction, e2)  # (t, 3)
    det = np.einsum("tj,tj->t", e1, pvec)
    ok = np.abs(det) > 1e-12
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)

    tvec = origins[:, None, :] - v0[None, :, :]  # (r, t, 3)
    u = np.einsum("rtj,tj->rt", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1[None, :, :])
    v = np.einsum("rtj,j->rt", qvec, direction) * inv_det
    t = np.einsum("rtj,tj->rt", qvec, e2) * inv_det

    eps = 1e-9
    hit = ok[None, :] & (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps) & (t >= eps)
    t = np.where(hit, t, np.inf)
    return t.min(axis=1)


def _orthobasis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0])
    if abs(float(axis @ helper)) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(axis, u)


def detect_handle(
    mesh: LinkMesh,
    front_axis,
    grid: int = RAY_GRID,
    depth_tol: float = HANDLE_DEPTH_TOL,
) -> HandleEstimate:
    """Find the most protruding feature of a link by parallel ray casting.

    A grid x grid bundle of rays is cast from just outside the link's bounding
    box face along -front_axis; the handle is the mean of the hit points whose
    distance is within ``depth_tol`` of the closest hit. Protrusion depth is
    the median hit distance minus the minimum.
    """
    axis = np.asarray(front_axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    tri = mesh.triangles
    pts = tri.reshape(-1, 3)

    u, v = _orthobasis(axis)
    au = pts @ u
    av = pts @ v
    an = pts @ axis
    margin = 0.01 * float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))) + 1e-6
    start = an.max() + margin

    us = np.linspace(au.min(), au.max(), grid + 2)[1:-1]
    vs = np.linspace(av.min(), av.max(), grid + 2)[1:-1]
    gu, gv = np.meshgrid(us, vs, indexing="ij")
    origins = gu.reshape(-1, 1) * u + gv.reshape(-1, 1) * v + start * axis

    dist = _ray_triangle_hits(origins, -axis, tri)
    hit = np.isfinite(dist)
    if not hit.any():
        raise NoHit(f"link {mesh.link_id!r}: no ray hit the mesh")
    dmin = float(dist[hit].min())
    near = hit & (dist <= dmin + depth_tol)
    hit_points = origins[near] - dist[near, None] * axis
    protrusion = float(np.median(dist[hit]) - dmin)
    return HandleEstimate(
        location=hit_points.mean(axis=0),
        hit_count=int(near.sum()),
        protrusion_depth=protrusion,
    )


def articulation_trajectory(
    handle: HandleEstimate,
    joint: JointSpec,
    direction: str = "open",
    n_waypoints: int = 32,
) -> Trajectory:
    """Analytical handle trajectory articulating a joint across its limits.

    Revolute joints sweep the handle on the circular arc about (origin, axis)
    from the low to the high limit, orientations rotating with the link;
    prismatic joints translate along the axis with a fixed orientation.
    "close" is exactly the reversed "open" waypoint list.
    """
    if direction not in ("open", "close"):
        raise ValueError(f"direction must be open or close, got {direction!r}")
    if n_waypoints < 2:
        raise ShapeMismatch("need at least 2 waypoints")
    lo, hi = joint.limits
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ShapeMismatch(f"joint limits must be finite, got [{lo}, {hi}]")
    steps = np.linspace(0.0, hi - lo, n_waypoints)

    if joint.joint_type == "prismatic":
        positions = handle.location[None, :] + steps[:, None] * joint.axis[None, :]
        orientations = np.tile(rotation.IDENTITY, (n_waypoints, 1))
    elif joint.joint_type == "revolute":
        arm = handle.location - joint.origin
        radial = arm - float(arm @ joint.axis) * joint.axis
        if np.linalg.norm(radial) < 1e-9:
            raise DegenerateRadius("handle lies on the joint axis")
        positions = np.empty((n_waypoints, 3))
        orientations = np.empty((n_waypoints, 4))
        for i, ang in enumerate(steps):
            q = rotation.from_axis_angle(joint.axis, float(ang))
            positions[i] = joint.origin + rotation.rotate(q, arm)
            orientations[i] = q
    else:
        raise ShapeMismatch(f"unknown joint type {joint.joint_type!r}")

    traj = Trajectory(positions, orientations)
    return traj.reversed() if direction == "close" else traj


def write_trajectory(traj: Trajectory, path: str | os.PathLike) -> None:
    payload = {
        "waypoints": [
            {
                "position": [float(x) for x in p],
                "quaternion": [float(x) for x in q],
            }
            for p, q in zip(traj.positions, traj.orientations)
        ]
    }
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)
