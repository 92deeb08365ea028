"""Asset placement, mount classification, and wall alignment."""

from __future__ import annotations

import dataclasses
import logging

import numpy as np

from .. import rotation
from ..bundle.types import AssetEntry, DelegateChoice, MountType, PlacedObject
from ..errors import DegenerateExtent, DegenerateInput
from ..geometry import Aabb, OrientedBox, Plane, PointCloud, project_polygon
from ..geometry.boxes import intersection_area
from ..matching import Cousin, refine_orientation_bbox

log = logging.getLogger(__name__)

WALL_PROXIMITY = 0.05  # rear face within this of a wall counts as touching
FLOOR_CLEARANCE = 0.10  # bottoms at least this high can be wall mounted
# Measured extents below this fraction of the largest extent are treated as
# occlusion artifacts and replaced by the asset's canonical aspect ratio.
MIN_EXTENT_RATIO = 0.05
SUPPORT_OVERLAP = 0.7  # fixed overlap fraction for the on-top relation


def world_box(obj: PlacedObject, entry: AssetEntry) -> OrientedBox:
    """The placed asset's bounding box in the world frame."""
    return OrientedBox(
        center=obj.position,
        size=obj.scale * entry.canonical_extents,
        orientation=obj.orientation,
    )


def world_collision_box(obj: PlacedObject, entry: AssetEntry) -> OrientedBox:
    """Collision box in the world frame; falls back to the bounding box.

    Per-axis scaling assumes the collision box is axis-aligned in the asset
    frame; oriented collision boxes are scaled approximately.
    """
    spec = entry.collision_box
    if spec is None:
        return world_box(obj, entry)
    center = obj.position + rotation.rotate(obj.orientation, obj.scale * spec.center)
    return OrientedBox(
        center=center,
        size=obj.scale * spec.size,
        orientation=rotation.multiply(obj.orientation, spec.orientation),
    )


def world_aabb(obj: PlacedObject, entry: AssetEntry) -> Aabb:
    corners = world_box(obj, entry).corners()
    return Aabb(corners.min(axis=0), corners.max(axis=0))


def place_object(
    object_id: str,
    cousin: Cousin,
    points: PointCloud,
    entry: AssetEntry,
    refine_orientation: bool = False,
) -> PlacedObject:
    """Pose and scale one matched asset against its filtered object points.

    Position is the center of the points' axis-aligned bounding box; the
    orientation is the cousin's (optionally refined against the cloud's
    minimum footprint); each scale axis is the measured extent in the asset's
    oriented frame over the canonical extent. Axes whose measured extent
    collapses (single-view occlusion) reuse the scale of the largest axis,
    preserving the canonical aspect ratio.
    """
    if len(points) == 0:
        raise DegenerateInput(f"object {object_id!r}: no points to place against")
    lo = points.points.min(axis=0)
    hi = points.points.max(axis=0)
    position = 0.5 * (lo + hi)

    q = rotation.normalize(cousin.orientation)
    if refine_orientation:
        q = refine_orientation_bbox(q, points)

    local = rotation.rotate(rotation.conjugate(q), points.points - position)
    extents = local.max(axis=0) - local.min(axis=0)
    jmax = int(np.argmax(extents))
    if extents[jmax] <= 0:
        raise DegenerateExtent(f"object {object_id!r}: measured extent is zero on every axis")

    scale = extents / entry.canonical_extents
    degenerate = extents < MIN_EXTENT_RATIO * extents[jmax]
    if degenerate.any():
        log.warning(
            "object %s: axes %s have collapsed measured extents; reusing the "
            "canonical aspect ratio",
            object_id,
            np.nonzero(degenerate)[0].tolist(),
        )
        scale[degenerate] = scale[jmax]

    return PlacedObject(
        source_object_id=object_id,
        asset_id=cousin.asset_id,
        position=position,
        orientation=q,
        scale=scale,
        mount_type=MountType("on_support"),
        support="floor",
    )


def _wall_gap(obj: PlacedObject, entry: AssetEntry, wall: Plane) -> float:
    """Distance from the object's nearest face to the wall, sign-normalized so
    the object side of the wall is positive."""
    corners = world_box(obj, entry).corners()
    side = 1.0 if wall.signed_distance(obj.position)[0] >= 0 else -1.0
    return float((side * wall.signed_distance(corners)).min())


def _supported_below(
    obj: PlacedObject,
    entry: AssetEntry,
    others: list[tuple[PlacedObject, AssetEntry]],
) -> bool:
    footprint = project_polygon(world_box(obj, entry))
    area = footprint.area()
    for other, other_entry in others:
        if other.source_object_id == obj.source_object_id:
            continue
        if other.position[2] >= obj.position[2]:
            continue
        other_fp = project_polygon(world_box(other, other_entry))
        overlap = intersection_area(footprint, other_fp)
        if overlap > SUPPORT_OVERLAP * min(area, other_fp.area()):
            return True
    return False


def classify_mount(
    obj: PlacedObject,
    entry: AssetEntry,
    walls: list[Plane],
    floor: Plane,
    others: list[tuple[PlacedObject, AssetEntry]],
    choice: DelegateChoice | None = None,
    wall_proximity: float = WALL_PROXIMITY,
    floor_clearance: float = FLOOR_CLEARANCE,
) -> MountType:
    """Wall-mounted / on-support / mixture classification.

    A sidecar annotation wins when present. The geometric fallback calls an
    object wall-adjacent when its nearest face is within ``wall_proximity``
    of a wall, and supported-below when it sits within ``floor_clearance`` of
    the floor or has a qualifying object underneath.
    """
    if choice is not None and choice.mount_type:
        kind = choice.mount_type
        if kind == "on_support":
            return MountType(kind)
        idx = choice.wall_index
        if idx is not None and 0 <= idx < len(walls):
            return MountType(kind, idx)
        log.warning(
            "object %s: sidecar mount %r names wall %r which does not resolve; "
            "using the geometric fallback",
            obj.source_object_id,
            kind,
            idx,
        )

    if not walls:
        return MountType("on_support")
    gaps = [_wall_gap(obj, entry, w) for w in walls]
    nearest = int(np.argmin(gaps))
    if gaps[nearest] > wall_proximity:
        return MountType("on_support")

    corners = world_box(obj, entry).corners()
    bottom_clear = float(floor.signed_distance(corners).min())
    near_floor = bottom_clear < floor_clearance
    if near_floor or _supported_below(obj, entry, others):
        return MountType("mixture", nearest)
    return MountType("wall_mounted", nearest)


def align_to_wall(
    obj: PlacedObject, entry: AssetEntry, wall: Plane
) -> PlacedObject:
    """Rotate the object's nearest local x/y axis onto the wall normal, then
    stretch its depth axis so the rear face lies on the wall while the front
    face keeps its position.

    The wall normal points into the room. When the wall plane lies in front
    of the object's front face (object fully behind the wall) the position is
    snapped so the rear face sits on the wall, scale untouched, with a
    warning.
    """
    into_wall = -wall.normal  # a room object's rear axis direction

    best = None
    for axis_idx in (0, 1):
        for sign in (1.0, -1.0):
            local = np.zeros(3)
            local[axis_idx] = sign
            world_axis = rotation.rotate(obj.orientation, local)
            ang = float(np.arccos(np.clip(np.dot(world_axis, into_wall), -1.0, 1.0)))
            if best is None or ang < best[0]:
                best = (ang, axis_idx, world_axis)
    ang, depth_axis, world_axis = best

    q = obj.orientation
    if ang > 1e-12:
        q = rotation.multiply(rotation.minimal_between(world_axis, into_wall), q)

    half = 0.5 * obj.scale[depth_axis] * entry.canonical_extents[depth_axis]
    center_gap = float(wall.signed_distance(obj.position)[0])  # + means in-room
    front = center_gap + half

    scale = obj.scale.copy()
    if front <= 1e-9 or half <= 1e-12:
        log.warning(
            "object %s: wall plane lies in front of the object's front face; "
            "snapping onto the wall without rescaling",
            obj.source_object_id,
        )
        position = obj.position + (half - center_gap) * wall.normal
    else:
        new_half = 0.5 * front
        scale[depth_axis] *= new_half / half
        position = obj.position + (new_half - center_gap) * wall.normal

    return dataclasses.replace(obj, position=position, orientation=q, scale=scale)
