"""Invariant checks for bundles, asset databases, and scenes.

Violations are data, not failures: each carries a machine-readable code and
the path of the offending field.
"""

from __future__ import annotations

import numpy as np

from ..errors import Violation
from .types import AssetDatabase, ExtractionBundle, SceneDescription

UNIT_EMBEDDING_TOL = 1e-5
UNIT_QUAT_TOL = 1e-6


def validate(value) -> list[Violation]:
    if isinstance(value, ExtractionBundle):
        return validate_bundle(value)
    if isinstance(value, AssetDatabase):
        return validate_asset_db(value)
    if isinstance(value, SceneDescription):
        return validate_scene(value)
    raise TypeError(f"cannot validate {type(value).__name__}")


def validate_bundle(bundle: ExtractionBundle) -> list[Violation]:
    out: list[Violation] = []
    k = bundle.intrinsics
    if k.fx <= 0 or k.fy <= 0:
        out.append(Violation("InvalidIntrinsics", "intrinsics", f"fx={k.fx}, fy={k.fy}"))
    if not (0 <= k.cx < k.width) or not (0 <= k.cy < k.height):
        out.append(Violation("InvalidIntrinsics", "intrinsics", f"cx={k.cx}, cy={k.cy}"))

    shape = (k.height, k.width)
    d = bundle.depth
    if d.values.shape != shape:
        out.append(Violation("ShapeMismatch", "depth", f"{d.values.shape} != {shape}"))
    vals = d.values[d.valid]
    if vals.size and not np.all(np.isfinite(vals)):
        out.append(Violation("NonFiniteValue", "depth", "non-finite valid depth"))
    if vals.size and np.any(vals <= 0):
        out.append(Violation("NonPositiveDepth", "depth", "valid depth <= 0"))

    if bundle.floor_mask.shape != shape:
        out.append(Violation("ShapeMismatch", "floor_mask", f"{bundle.floor_mask.shape}"))
    for w, m in enumerate(bundle.wall_masks):
        if m.shape != shape:
            out.append(Violation("ShapeMismatch", f"wall_masks[{w}]", f"{m.shape}"))

    seen: set[str] = set()
    d_vis: int | None = None
    d_text: int | None = None
    for i, obj in enumerate(bundle.objects):
        path = f"objects[{i}]"
        if obj.id in seen:
            out.append(Violation("DuplicateObjectId", path, obj.id))
        seen.add(obj.id)
        if obj.mask.shape != shape:
            out.append(Violation("ShapeMismatch", f"{path}.mask", f"{obj.mask.shape}"))
        if not obj.mask.any():
            out.append(Violation("EmptyMask", path, obj.id))
        emb = np.asarray(obj.label_embedding, dtype=np.float64)
        if not np.all(np.isfinite(emb)):
            out.append(Violation("NonFiniteValue", f"{path}.label_embedding", obj.id))
        elif abs(np.linalg.norm(emb) - 1.0) > UNIT_EMBEDDING_TOL:
            out.append(Violation("NonUnitEmbedding", f"{path}.label_embedding", obj.id))
        if not np.all(np.isfinite(obj.features)):
            out.append(Violation("NonFiniteValue", f"{path}.features", obj.id))
        if d_vis is None:
            d_vis = obj.features.shape[-1]
        elif obj.features.shape[-1] != d_vis:
            out.append(Violation("FeatureDimMismatch", f"{path}.features", obj.id))
        if d_text is None:
            d_text = emb.shape[0]
        elif emb.shape[0] != d_text:
            out.append(Violation("FeatureDimMismatch", f"{path}.label_embedding", obj.id))
    return out


def validate_asset_db(db: AssetDatabase) -> list[Violation]:
    out: list[Violation] = []
    seen: set[str] = set()
    d_vis: int | None = None
    d_text: int | None = None
    for i, asset in enumerate(db.assets):
        path = f"assets[{i}]"
        if asset.id in seen:
            out.append(Violation("DuplicateAssetId", path, asset.id))
        seen.add(asset.id)
        if np.any(asset.canonical_extents <= 0):
            out.append(Violation("NonPositiveExtent", f"{path}.canonical_extents", asset.id))
        if len(asset.snapshots) < 1:
            out.append(Violation("EmptySnapshots", f"{path}.snapshots", asset.id))
        reps = sum(1 for s in asset.snapshots if s.representative)
        if len(asset.snapshots) and reps != 1:
            out.append(Violation("RepresentativeCount", f"{path}.snapshots", f"{reps} marked"))
        emb = np.asarray(asset.category_embedding, dtype=np.float64)
        if abs(np.linalg.norm(emb) - 1.0) > UNIT_EMBEDDING_TOL:
            out.append(Violation("NonUnitEmbedding", f"{path}.category_embedding", asset.id))
        if d_text is None:
            d_text = emb.shape[0]
        elif emb.shape[0] != d_text:
            out.append(Violation("FeatureDimMismatch", f"{path}.category_embedding", asset.id))
        if asset.door_count < 0 or asset.drawer_count < 0:
            out.append(Violation("NegativeCount", path, asset.id))
        for s, snap in enumerate(asset.snapshots):
            spath = f"{path}.snapshots[{s}]"
            if abs(np.linalg.norm(snap.orientation) - 1.0) > UNIT_QUAT_TOL:
                out.append(Violation("NonUnitQuaternion", spath, asset.id))
            if not np.all(np.isfinite(snap.features)):
                out.append(Violation("NonFiniteValue", f"{spath}.features", asset.id))
            if d_vis is None:
                d_vis = snap.features.shape[-1]
            elif snap.features.shape[-1] != d_vis:
                out.append(Violation("FeatureDimMismatch", f"{spath}.features", asset.id))
        for L, link in enumerate(asset.links):
            lpath = f"{path}.links[{L}]"
            if abs(np.linalg.norm(link.joint.axis) - 1.0) > UNIT_QUAT_TOL:
                out.append(Violation("NonUnitAxis", f"{lpath}.joint.axis", link.name))
            if link.joint.joint_type not in ("revolute", "prismatic"):
                out.append(Violation("UnknownJointType", lpath, link.joint.joint_type))
            lo, hi = link.joint.limits
            if not lo < hi:
                out.append(Violation("InvalidJointLimits", lpath, f"[{lo}, {hi}]"))
    return out


def validate_scene(scene: SceneDescription) -> list[Violation]:
    out: list[Violation] = []
    ids = {o.source_object_id for o in scene.objects}
    for i, obj in enumerate(scene.objects):
        path = f"objects[{i}]"
        if abs(np.linalg.norm(obj.orientation) - 1.0) > UNIT_QUAT_TOL:
            out.append(Violation("NonUnitQuaternion", path, obj.source_object_id))
        if np.any(obj.scale <= 0):
            out.append(Violation("NonPositiveScale", path, obj.source_object_id))
        sup = obj.support
        if sup == "floor":
            pass
        elif sup.startswith("wall:"):
            idx = _parse_index(sup[5:])
            if idx is None or not (0 <= idx < len(scene.wall_planes)):
                out.append(Violation("UnresolvedSupport", path, sup))
        elif sup.startswith("object:"):
            target = sup[7:]
            if target not in ids or target == obj.source_object_id:
                out.append(Violation("UnresolvedSupport", path, sup))
        else:
            out.append(Violation("UnresolvedSupport", path, sup))
        mt = obj.mount_type
        if mt.kind in ("wall_mounted", "mixture"):
            if mt.wall_index is None or not (0 <= mt.wall_index < len(scene.wall_planes)):
                out.append(Violation("UnresolvedWall", path, str(mt)))
    for i, plane in enumerate([scene.floor_plane, *scene.wall_planes]):
        name = "floor_plane" if i == 0 else f"wall_planes[{i - 1}]"
        if abs(np.linalg.norm(plane.normal) - 1.0) > 1e-9:
            out.append(Violation("NonUnitNormal", name, ""))
    out.extend(_support_cycles(scene))
    return out


def _parse_index(text: str) -> int | None:
    try:
        return int(text)
    except ValueError:
        return None


def _support_cycles(scene: SceneDescription) -> list[Violation]:
    parent = {
        o.source_object_id: o.support[7:]
        for o in scene.objects
        if o.support.startswith("object:")
    }
    out = []
    for start in parent:
        seen = {start}
        cur = start
        while cur in parent:
            cur = parent[cur]
            if cur in seen:
                out.append(Violation("SupportCycle", f"objects[{start!r}]", cur))
                break
            seen.add(cur)
    return out
