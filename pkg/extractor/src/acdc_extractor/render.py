"""Analytic z-buffer renderer backing the mock segmentation/depth models.

Fixture scenes are yaw-rotated boxes on a z=0 floor with an optional wall
plane; the mock "models" observe exactly this geometry.
"""

from __future__ import annotations

import math

import numpy as np


def camera_axes(tilt: float) -> np.ndarray:
    """Columns (right, down, forward) for a +x-heading camera tilted down."""
    forward = np.array([math.cos(tilt), 0.0, -math.sin(tilt)])
    right = np.array([0.0, -1.0, 0.0])
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


def _ray_box(origin, dirs, center, size, yaw):
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    o = rot.T @ (origin - np.asarray(center, dtype=float))
    d = dirs @ rot
    h = 0.5 * np.asarray(size, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-h - o) / d
        t2 = (h - o) / d
    lo = np.where(np.isnan(t1), -np.inf, np.minimum(t1, t2)).max(axis=-1)
    hi = np.where(np.isnan(t2), np.inf, np.maximum(t1, t2)).min(axis=-1)
    return np.where((lo <= hi) & (lo > 1e-9), lo, np.inf)


def _ray_quad(origin, dirs, point, normal, bounds):
    normal = np.asarray(normal, dtype=float)
    denom = dirs @ normal
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((np.asarray(point, dtype=float) - origin) @ normal) / denom
    t = np.where((np.abs(denom) > 1e-12) & (t > 1e-9), t, np.inf)
    pts = origin + t[..., None] * dirs
    return np.where(bounds(pts), t, np.inf)


def render(fixture: dict) -> tuple[np.ndarray, np.ndarray]:
    """(depth, owner) for a fixture scene. Owner indices: object order, then
    len(objects) for the floor, len(objects)+1 for the wall; -1 for sky.
    Depth is camera-frame z; 0 where nothing was hit."""
    k = fixture["intrinsics"]
    width, height = int(k["width"]), int(k["height"])
    cam = fixture["camera"]
    axes = camera_axes(float(cam["tilt"]))
    origin = np.asarray(cam["pos"], dtype=float)
    uu, vv = np.meshgrid(np.arange(width), np.arange(height))
    dir_cam = np.stack(
        [(uu - k["cx"]) / k["fx"], (vv - k["cy"]) / k["fy"], np.ones_like(uu, float)],
        axis=-1,
    )
    dirs = dir_cam @ axes.T

    layers = [
        _ray_box(origin, dirs, obj["center"], obj["size"], float(obj.get("yaw", 0.0)))
        for obj in fixture["objects"]
    ]
    span = float(fixture.get("floor_span", 40.0))
    layers.append(
        _ray_quad(
            origin, dirs, [0, 0, 0], [0, 0, 1.0],
            lambda p: (np.abs(p[..., 0]) <= span) & (np.abs(p[..., 1]) <= span),
        )
    )
    if fixture.get("wall_x") is not None:
        wall_x = float(fixture["wall_x"])
        layers.append(
            _ray_quad(
                origin, dirs, [wall_x, 0, 0], [-1.0, 0, 0],
                lambda p: (np.abs(p[..., 1]) <= span)
                & (p[..., 2] >= 0)
                & (p[..., 2] <= 10),
            )
        )
    stack = np.stack(layers)
    owner = np.argmin(stack, axis=0)
    depth = stack[owner, np.arange(height)[:, None], np.arange(width)[None, :]]
    owner = np.where(np.isfinite(depth), owner, -1)
    depth = np.where(np.isfinite(depth), depth, 0.0)
    return depth.astype(np.float32), owner
