"""Reconstruction-quality metrics: a generated scene against ground truth.

Per paired object: category/model accuracy, center distance in cm, symmetry-
aware orientation difference, axis-aligned 3D box IoU, and the IoU after
aligning box centers. An oriented-box IoU (z-aligned prism intersection) is
reported as an auxiliary column.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rotation
from .bundle.types import AssetDatabase, SceneDescription
from .errors import InvalidPolygon, UnpairedObject
from .geometry import Aabb, intersection_area, project_polygon
from .scenegen.place import world_box

# Named symmetry groups for orientation comparison, as asset-frame quaternions.
ROTATION_GROUPS: dict[str, list[np.ndarray]] = {
    "identity": [rotation.IDENTITY],
    "centrosymmetric": [rotation.IDENTITY, rotation.about_z(np.pi)],
    "z4": [rotation.about_z(k * np.pi / 2) for k in range(4)],
}


@dataclass(frozen=True)
class ObjectMetrics:
    source_object_id: str
    category_match: bool
    model_match: bool
    center_l2_cm: float
    orientation_diff_rad: float
    bbox_iou: float
    center_aligned_iou: float
    oriented_bbox_iou: float


@dataclass(frozen=True)
class MetricsReport:
    scene_scale_m: float
    category_accuracy: float
    model_accuracy: float
    category_counts: tuple[int, int]  # matched, total
    model_counts: tuple[int, int]
    center_l2_cm: tuple[float, float]  # mean, std
    orientation_diff_rad: tuple[float, float]
    bbox_iou: tuple[float, float]
    center_aligned_iou: tuple[float, float]
    oriented_bbox_iou: tuple[float, float]
    per_object: tuple[ObjectMetrics, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "per_object", tuple(self.per_object))


def aabb_iou(a: Aabb, b: Aabb) -> float:
    """Axis-aligned 3D IoU; symmetric, 1 for identical boxes, 0 when disjoint."""
    lo = np.maximum(a.min, b.min)
    hi = np.minimum(a.max, b.max)
    if np.any(hi <= lo):
        return 0.0
    inter = float(np.prod(hi - lo))
    va = float(np.prod(a.extents))
    vb = float(np.prod(b.extents))
    union = va + vb - inter
    return inter / union if union > 0 else 0.0


def _prism_volume_intersection(box_a, box_b) -> float:
    """Intersection volume treating each oriented box as a z-aligned prism
    (exact for yaw-only orientations)."""
    ca, cb = box_a.corners(), box_b.corners()
    z_over = min(ca[:, 2].max(), cb[:, 2].max()) - max(ca[:, 2].min(), cb[:, 2].min())
    if z_over <= 0:
        return 0.0
    try:
        area = intersection_area(project_polygon(box_a), project_polygon(box_b))
    except InvalidPolygon:
        return 0.0
    return area * z_over


def oriented_iou(box_a, box_b) -> float:
    inter = _prism_volume_intersection(box_a, box_b)
    if inter == 0.0:
        return 0.0

    def vol(box):
        c = box.corners()
        footprint = project_polygon(box).area()
        return footprint * (c[:, 2].max() - c[:, 2].min())

    union = vol(box_a) + vol(box_b) - inter
    return inter / union if union > 0 else 0.0


def _symmetry_group(table: dict | None, category: str) -> list[np.ndarray]:
    if not table or category not in table:
        return ROTATION_GROUPS["identity"]
    value = table[category]
    if isinstance(value, str):
        return ROTATION_GROUPS[value]
    return [rotation.normalize(q) for q in value]


def orientation_difference(q_gt, q_rec, group: list[np.ndarray]) -> float:
    """Geodesic angle minimized over the ground-truth asset's symmetry group."""
    return min(rotation.geodesic_angle(rotation.multiply(q_gt, g), q_rec) for g in group)


def _scene_scale(scene: SceneDescription, db: AssetDatabase) -> float:
    centers = [o.position for o in scene.objects]
    if len(centers) < 2:
        return 0.0
    best = 0.0
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            best = max(best, float(np.linalg.norm(centers[i] - centers[j])))
    return best


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return 0.0, 0.0
    return float(arr.mean()), float(arr.std())


def evaluate(
    gt: SceneDescription,
    rec: SceneDescription,
    db: AssetDatabase,
    symmetry: dict | None = None,
) -> MetricsReport:
    """Compare a reconstructed scene against ground truth, paired 1:1 by
    source_object_id. Raises UnpairedObject when the pairing is not 1:1."""
    rec_by_id = {o.source_object_id: o for o in rec.objects}
    gt_ids = [o.source_object_id for o in gt.objects]
    missing = [i for i in gt_ids if i not in rec_by_id]
    extra = [i for i in rec_by_id if i not in set(gt_ids)]
    if missing or extra:
        raise UnpairedObject(f"missing from reconstruction: {missing}; extra: {extra}")

    rows: list[ObjectMetrics] = []
    for gt_obj in gt.objects:
        rec_obj = rec_by_id[gt_obj.source_object_id]
        gt_entry = db.asset_by_id(gt_obj.asset_id)
        rec_entry = db.asset_by_id(rec_obj.asset_id)

        gt_box = world_box(gt_obj, gt_entry)
        rec_box = world_box(rec_obj, rec_entry)
        gt_aabb = Aabb(gt_box.corners().min(axis=0), gt_box.corners().max(axis=0))
        rec_aabb = Aabb(rec_box.corners().min(axis=0), rec_box.corners().max(axis=0))

        shift = gt_aabb.center - rec_aabb.center
        aligned = Aabb(rec_aabb.min + shift, rec_aabb.max + shift)

        group = _symmetry_group(symmetry, gt_entry.category)
        rows.append(
            ObjectMetrics(
                source_object_id=gt_obj.source_object_id,
                category_match=gt_entry.category == rec_entry.category,
                model_match=gt_obj.asset_id == rec_obj.asset_id,
                center_l2_cm=float(np.linalg.norm(gt_obj.position - rec_obj.position)) * 100.0,
                orientation_diff_rad=orientation_difference(
                    gt_obj.orientation, rec_obj.orientation, group
                ),
                bbox_iou=aabb_iou(gt_aabb, rec_aabb),
                center_aligned_iou=aabb_iou(gt_aabb, aligned),
                oriented_bbox_iou=oriented_iou(gt_box, rec_box),
            )
        )

    n = len(rows)
    cat = sum(r.category_match for r in rows)
    mod = sum(r.model_match for r in rows)
    return MetricsReport(
        scene_scale_m=_scene_scale(gt, db),
        category_accuracy=cat / n if n else 0.0,
        model_accuracy=mod / n if n else 0.0,
        category_counts=(cat, n),
        model_counts=(mod, n),
        center_l2_cm=_mean_std([r.center_l2_cm for r in rows]),
        orientation_diff_rad=_mean_std([r.orientation_diff_rad for r in rows]),
        bbox_iou=_mean_std([r.bbox_iou for r in rows]),
        center_aligned_iou=_mean_std([r.center_aligned_iou for r in rows]),
        oriented_bbox_iou=_mean_std([r.oriented_bbox_iou for r in rows]),
        per_object=tuple(rows),
    )


def aggregate(reports: list[MetricsReport]) -> dict:
    """Per-scene rows plus pooled statistics over all objects.

    Scenes with no objects are flagged and excluded from pooling.
    """
    if not reports:
        raise ValueError("need at least one report")
    rows = []
    pooled: dict[str, list[float]] = {
        "center_l2_cm": [],
        "orientation_diff_rad": [],
        "bbox_iou": [],
        "center_aligned_iou": [],
        "oriented_bbox_iou": [],
    }
    cat_m = cat_t = mod_m = mod_t = 0
    for i, rep in enumerate(reports):
        row = report_payload(rep)
        row["scene_index"] = i
        row["empty"] = len(rep.per_object) == 0
        rows.append(row)
        if not rep.per_object:
            continue
        cat_m += rep.category_counts[0]
        cat_t += rep.category_counts[1]
        mod_m += rep.model_counts[0]
        mod_t += rep.model_counts[1]
        for r in rep.per_object:
            pooled["center_l2_cm"].append(r.center_l2_cm)
            pooled["orientation_diff_rad"].append(r.orientation_diff_rad)
            pooled["bbox_iou"].append(r.bbox_iou)
            pooled["center_aligned_iou"].append(r.center_aligned_iou)
            pooled["oriented_bbox_iou"].append(r.oriented_bbox_iou)
    summary = {key: _mean_std(vals) for key, vals in pooled.items()}
    return {
        "scenes": rows,
        "pooled": {
            "category_accuracy": cat_m / cat_t if cat_t else 0.0,
            "model_accuracy": mod_m / mod_t if mod_t else 0.0,
            **{k: {"mean": v[0], "std": v[1]} for k, v in summary.items()},
        },
    }


def report_payload(report: MetricsReport) -> dict:
    def pair(t):
        return {"mean": t[0], "std": t[1]}

    return {
        "scene_scale_m": report.scene_scale_m,
        "category_accuracy": report.category_accuracy,
        "model_accuracy": report.model_accuracy,
        "category_counts": list(report.category_counts),
        "model_counts": list(report.model_counts),
        "center_l2_cm": pair(report.center_l2_cm),
        "center_l2_per_scale": pair(
            tuple(v / report.scene_scale_m for v in report.center_l2_cm)
        )
        if report.scene_scale_m > 0
        else None,
        "orientation_diff_rad": pair(report.orientation_diff_rad),
        "bbox_iou": pair(report.bbox_iou),
        "center_aligned_iou": pair(report.center_aligned_iou),
        "oriented_bbox_iou": pair(report.oriented_bbox_iou),
        "per_object": [
            {
                "source_object_id": r.source_object_id,
                "category_match": r.category_match,
                "model_match": r.model_match,
                "center_l2_cm": r.center_l2_cm,
                "orientation_diff_rad": r.orientation_diff_rad,
                "bbox_iou": r.bbox_iou,
                "center_aligned_iou": r.center_aligned_iou,
                "oriented_bbox_iou": r.oriented_bbox_iou,
            }
            for r in report.per_object
        ],
    }


def format_table(report: MetricsReport) -> str:
    """Plain-text row mirroring the reconstruction-quality table columns."""
    cat = f"{report.category_counts[0]}/{report.category_counts[1]}"
    mod = f"{report.model_counts[0]}/{report.model_counts[1]}"

    def pm(t, digits=2):
        return f"{t[0]:.{digits}f} ± {t[1]:.{digits}f}"

    header = (
        f"{'Cat.':>6} {'Mod.':>6} {'L2 Dist. (cm)':>16} {'Ori. Diff. (rad)':>18} "
        f"{'Bbox IoU':>14} {'Cen. IoU':>14}"
    )
    row = (
        f"{cat:>6} {mod:>6} {pm(report.center_l2_cm):>16} "
        f"{pm(report.orientation_diff_rad):>18} {pm(report.bbox_iou):>14} "
        f"{pm(report.center_aligned_iou):>14}"
    )
    return header + "\n" + row


def write_metrics(report: MetricsReport, path: str | os.PathLike) -> None:
    text = json.dumps(report_payload(report), indent=2) + "\n"
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
