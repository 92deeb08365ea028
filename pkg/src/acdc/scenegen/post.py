"""Scene post-processing: support inference, de-penetration, xy collision resolution."""

from __future__ import annotations

import dataclasses
import logging

import numpy as np

from ..bundle.types import AssetEntry, PlacedObject
from ..geometry import Plane, Polygon2D, intersection_area, project_polygon
from .place import SUPPORT_OVERLAP, world_aabb, world_box, world_collision_box

log = logging.getLogger(__name__)

RESOLVE_MAX_ITERS = 100
RESOLVE_MARGIN = 1e-3  # extra separation beyond the overlap depth
Z_CONTACT_EPS = 1e-9  # z ranges closer than this do not count as overlapping

FLOOR = "floor"


def qualifies_on_top(overlap: float, area_i: float, area_j: float) -> bool:
    """The on-top link rule; strictly greater than the 0.7 fraction."""
    return overlap > SUPPORT_OVERLAP * min(area_i, area_j)


def infer_supports(
    placed: list[PlacedObject], entries: dict[str, AssetEntry]
) -> dict[str, str]:
    """Map each object id to what lies beneath it: another object's id or "floor".

    Objects are scanned low to high by box center; an object sits on a strictly
    lower one when their footprints overlap more than the 0.7 fraction of the
    smaller footprint. Several qualifying supports resolve to the one with the
    highest top face, then the larger overlap, then the smaller id.
    """
    order = sorted(placed, key=lambda o: (o.position[2], o.source_object_id))
    footprints: dict[str, Polygon2D] = {}
    for obj in order:
        footprints[obj.source_object_id] = project_polygon(
            world_box(obj, entries[obj.asset_id])
        )
    beneath: dict[str, str] = {}
    for i, obj in enumerate(order):
        fp_i = footprints[obj.source_object_id]
        area_i = fp_i.area()
        candidates = []
        for other in order[:i]:
            if other.position[2] >= obj.position[2]:
                continue  # equal centers are not "strictly lower"
            fp_j = footprints[other.source_object_id]
            overlap = intersection_area(fp_i, fp_j)
            if qualifies_on_top(overlap, area_i, fp_j.area()):
                top = world_aabb(other, entries[other.asset_id]).max[2]
                candidates.append((-top, -overlap, other.source_object_id))
        if candidates:
            beneath[obj.source_object_id] = min(candidates)[2]
        else:
            beneath[obj.source_object_id] = FLOOR
    return beneath


def _floor_z_at(floor: Plane, xy: np.ndarray) -> float:
    n = floor.normal
    p = floor.point
    if abs(n[2]) < 1e-6:
        return float(p[2])
    return float(p[2] - (n[0] * (xy[0] - p[0]) + n[1] * (xy[1] - p[1])) / n[2])


def depenetrate(
    placed: list[PlacedObject],
    beneath: dict[str, str],
    entries: dict[str, AssetEntry],
    floor: Plane,
    walls: list[Plane] | None = None,
) -> list[PlacedObject]:
    """Raise each object so its box bottom clears its support's box top.

    Objects are processed low to high against already-updated geometry, so
    embedded stacks resolve in one pass; the raise is exactly
    max(0, z_top(support) - z_bottom(object)). Wall-mounted objects are
    re-fixed to their wall after the raise.
    """
    walls = walls or []
    by_id = {o.source_object_id: o for o in placed}
    order = sorted(placed, key=lambda o: (o.position[2], o.source_object_id))
    for obj in order:
        oid = obj.source_object_id
        current = by_id[oid]
        entry = entries[current.asset_id]
        box = world_aabb(current, entry)
        under = beneath.get(oid, FLOOR)
        if under == FLOOR:
            support_top = _floor_z_at(floor, current.position[:2])
        else:
            support_obj = by_id[under]
            support_top = world_aabb(support_obj, entries[support_obj.asset_id]).max[2]
        lift = support_top - box.min[2]
        if lift > 0:
            position = current.position + np.array([0.0, 0.0, lift])
            current = dataclasses.replace(current, position=position)
        if current.mount_type.kind in ("wall_mounted", "mixture"):
            idx = current.mount_type.wall_index
            if idx is not None and 0 <= idx < len(walls):
                current = _refix_to_wall(current, entry, walls[idx])
        by_id[oid] = current
    return [by_id[o.source_object_id] for o in placed]


def _refix_to_wall(obj: PlacedObject, entry: AssetEntry, wall: Plane) -> PlacedObject:
    corners = world_box(obj, entry).corners()
    rear_gap = float(wall.signed_distance(corners).min())
    if abs(rear_gap) < 1e-12:
        return obj
    position = obj.position - rear_gap * wall.normal
    return dataclasses.replace(obj, position=position)


def _mtv(a: Polygon2D, b: Polygon2D) -> tuple[float, np.ndarray] | None:
    """Minimal translation (depth, unit axis pushing b away from a) separating
    two convex polygons, or None when already separated."""
    best_depth = np.inf
    best_axis = None
    for poly in (a.vertices, b.vertices):
        n = len(poly)
        for i in range(n):
            edge = poly[(i + 1) % n] - poly[i]
            norm = np.hypot(edge[0], edge[1])
            if norm < 1e-15:
                continue
            axis = np.array([-edge[1], edge[0]]) / norm
            pa = a.vertices @ axis
            pb = b.vertices @ axis
            overlap = min(pa.max(), pb.max()) - max(pa.min(), pb.min())
            if overlap <= 0:
                return None
            if overlap < best_depth:
                best_depth = overlap
                best_axis = axis
    direction = b.vertices.mean(axis=0) - a.vertices.mean(axis=0)
    if float(direction @ best_axis) < 0:
        best_axis = -best_axis
    return float(best_depth), best_axis


def resolve_xy(
    placed: list[PlacedObject],
    entries: dict[str, AssetEntry],
    max_iters: int = RESOLVE_MAX_ITERS,
    margin: float = RESOLVE_MARGIN,
) -> tuple[list[PlacedObject], int, bool]:
    """Separate colliding collision boxes in the xy plane.

    Pairs are visited in id order; a pair collides when its z ranges overlap
    and its footprints intersect. The lighter-footprint object moves along the
    minimal-translation vector by the overlap depth plus ``margin``. Returns
    (objects, iterations used, converged). Non-convergence within
    ``max_iters`` leaves residual overlaps and logs a warning.
    """
    by_id = {o.source_object_id: o for o in placed}
    ids = sorted(by_id)

    def boxes(oid: str):
        obj = by_id[oid]
        box = world_collision_box(obj, entries[obj.asset_id])
        corners = box.corners()
        return project_polygon(box), corners[:, 2].min(), corners[:, 2].max()

    geo = {oid: boxes(oid) for oid in ids}
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        moved = False
        for i, oid_a in enumerate(ids):
            for oid_b in ids[i + 1 :]:
                fp_a, lo_a, hi_a = geo[oid_a]
                fp_b, lo_b, hi_b = geo[oid_b]
                if min(hi_a, hi_b) - max(lo_a, lo_b) <= Z_CONTACT_EPS:
                    continue
                hit = _mtv(fp_a, fp_b)
                if hit is None:
                    continue
                depth, axis = hit
                # lighter footprint moves; ties push the larger id
                if fp_a.area() < fp_b.area():
                    mover, push = oid_a, -axis
                elif fp_b.area() < fp_a.area():
                    mover, push = oid_b, axis
                else:
                    mover, push = max(oid_a, oid_b), axis if oid_b > oid_a else -axis
                shift = np.array([push[0], push[1], 0.0]) * (depth + margin)
                obj = by_id[mover]
                by_id[mover] = dataclasses.replace(obj, position=obj.position + shift)
                geo[mover] = boxes(mover)
                moved = True
        if not moved:
            converged = True
            break
    if not converged:
        log.warning(
            "xy collision resolution did not converge in %d iterations; "
            "residual overlaps remain",
            max_iters,
        )
    return [by_id[o.source_object_id] for o in placed], iterations, converged
