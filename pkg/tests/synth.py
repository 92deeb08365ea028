"""Synthetic fixture builders: bundle/DB directory writers and an analytic
ray-box depth renderer.

The writers build files directly from the documented layout rather than going
through the package, so reader bugs cannot hide behind writer bugs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


# -- deterministic feature grids -------------------------------------------------


def random_unit_grid(rng: np.random.Generator, hp: int, wp: int, d: int) -> np.ndarray:
    g = rng.normal(size=(hp, wp, d))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return g.astype(np.float32)


def unit_vector(d: int, index: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.float32)
    v[index % d] = 1.0
    return v


# -- directory writers ------------------------------------------------------------


def write_bundle_dir(
    path: Path,
    intrinsics: dict,
    depth: np.ndarray,
    objects: list[dict],
    wall_masks: list[np.ndarray] | None = None,
    floor_mask: np.ndarray | None = None,
    sidecar: dict | None = None,
) -> Path:
    """Write a bundle directory. Each object dict carries id, label,
    label_embedding, mask, features, articulated."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    h, w = depth.shape
    np.asarray(depth, dtype="<f4").tofile(path / "depth.f32")
    if floor_mask is None:
        floor_mask = np.zeros((h, w), dtype=bool)
    (floor_mask.astype(np.uint8) * 255).tofile(path / "floor.u8")
    wall_masks = wall_masks or []
    for i, m in enumerate(wall_masks):
        (m.astype(np.uint8) * 255).tofile(path / f"wall_{i}.u8")

    object_entries = []
    for obj in objects:
        oid = obj["id"]
        (obj["mask"].astype(np.uint8) * 255).tofile(path / f"mask_{oid}.u8")
        np.asarray(obj["features"], dtype="<f4").tofile(path / f"feat_{oid}.f32")
        np.asarray(obj["label_embedding"], dtype="<f4").tofile(path / f"label_emb_{oid}.f32")
        object_entries.append(
            {
                "id": oid,
                "label": obj.get("label", oid),
                "articulated": bool(obj.get("articulated", False)),
                "mask": {"file": f"mask_{oid}.u8", "shape": [h, w]},
                "features": {
                    "file": f"feat_{oid}.f32",
                    "shape": list(np.asarray(obj["features"]).shape),
                },
                "label_embedding": {
                    "file": f"label_emb_{oid}.f32",
                    "shape": [int(np.asarray(obj["label_embedding"]).shape[0])],
                },
            }
        )

    manifest = {
        "schema_version": 1,
        "intrinsics": intrinsics,
        "depth": {"file": "depth.f32", "shape": [h, w]},
        "floor_mask": {"file": "floor.u8", "shape": [h, w]},
        "wall_masks": [
            {"file": f"wall_{i}.u8", "shape": [h, w]} for i in range(len(wall_masks))
        ],
        "objects": object_entries,
    }
    if sidecar is not None:
        (path / "sidecar.json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
        manifest["sidecar"] = "sidecar.json"
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


def write_asset_db_dir(path: Path, assets: list[dict]) -> Path:
    """Write an asset DB directory. Each asset dict: id, category,
    category_embedding, canonical_extents, snapshots (list of dicts with
    orientation, features, representative), optional door/drawer counts,
    links, collision_box, meshes (name -> tri-text string)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    for asset in assets:
        aid = asset["id"]
        np.asarray(asset["category_embedding"], dtype="<f4").tofile(path / f"catemb_{aid}.f32")
        snaps = []
        for s, snap in enumerate(asset["snapshots"]):
            fname = f"snap_{aid}_{s}.f32"
            np.asarray(snap["features"], dtype="<f4").tofile(path / fname)
            snaps.append(
                {
                    "orientation": [float(x) for x in snap["orientation"]],
                    "representative": bool(snap.get("representative", s == 0)),
                    "features": {
                        "file": fname,
                        "shape": list(np.asarray(snap["features"]).shape),
                    },
                }
            )
        entry = {
            "id": aid,
            "category": asset["category"],
            "category_embedding": {
                "file": f"catemb_{aid}.f32",
                "shape": [int(np.asarray(asset["category_embedding"]).shape[0])],
            },
            "canonical_extents": [float(x) for x in asset["canonical_extents"]],
            "door_count": int(asset.get("door_count", 0)),
            "drawer_count": int(asset.get("drawer_count", 0)),
            "snapshots": snaps,
        }
        if asset.get("links"):
            entry["links"] = asset["links"]
        if asset.get("collision_box"):
            entry["collision_box"] = asset["collision_box"]
        entries.append(entry)
        for name, text in asset.get("meshes", {}).items():
            (path / name).write_text(text, encoding="utf-8")
    (path / "db_manifest.json").write_text(
        json.dumps({"schema_version": 1, "assets": entries}, indent=2), encoding="utf-8"
    )
    return path


# -- mesh fixtures -----------------------------------------------------------------


def box_triangles(center, size) -> np.ndarray:
    """12 triangles of an axis-aligned box, (12, 3, 3)."""
    c = np.asarray(center, dtype=np.float64)
    h = 0.5 * np.asarray(size, dtype=np.float64)
    corners = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64
    )
    v = c + corners * h
    faces = [
        (0, 1, 3), (0, 3, 2), (4, 6, 7), (4, 7, 5),
        (0, 4, 5), (0, 5, 1), (2, 3, 7), (2, 7, 6),
        (0, 2, 6), (0, 6, 4), (1, 5, 7), (1, 7, 3),
    ]
    return np.array([[v[a], v[b], v[c_]] for a, b, c_ in faces])


def tri_text(triangles: np.ndarray) -> str:
    """Serialize (t, 3, 3) triangles to the indexed tri-text format."""
    verts: list[tuple[float, float, float]] = []
    index: dict[tuple[float, float, float], int] = {}
    faces = []
    for tri in triangles:
        face = []
        for p in tri:
            key = (float(p[0]), float(p[1]), float(p[2]))
            if key not in index:
                index[key] = len(verts)
                verts.append(key)
            face.append(index[key])
        faces.append(face)
    lines = ["# synthetic mesh"]
    lines += [f"v {x} {y} {z}" for x, y, z in verts]
    lines += [f"t {a} {b} {c}" for a, b, c in faces]
    return "\n".join(lines) + "\n"


# -- analytic depth renderer --------------------------------------------------------


def camera_axes(tilt: float) -> np.ndarray:
    """Camera basis (columns: right, down, forward) for a camera at +x heading
    tilted down by ``tilt`` radians, in a z-up world."""
    forward = np.array([math.cos(tilt), 0.0, -math.sin(tilt)])
    right = np.array([0.0, -1.0, 0.0])
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


def _ray_box(origin, dirs, center, size, yaw) -> np.ndarray:
    """Slab-test entry distance per ray for a yaw-rotated box; inf if missed."""
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    o = rot.T @ (origin - np.asarray(center))
    d = dirs @ rot  # row-vector form of rot.T @ d
    h = 0.5 * np.asarray(size)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-h - o) / d
        t2 = (h - o) / d
    lo = np.where(np.isnan(t1), -np.inf, np.minimum(t1, t2)).max(axis=-1)
    hi = np.where(np.isnan(t2), np.inf, np.maximum(t1, t2)).min(axis=-1)
    t = np.where((lo <= hi) & (lo > 1e-9), lo, np.inf)
    return t


def _ray_quad(origin, dirs, point, normal, bounds_fn) -> np.ndarray:
    denom = dirs @ np.asarray(normal)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((np.asarray(point) - origin) @ np.asarray(normal)) / denom
    t = np.where((np.abs(denom) > 1e-12) & (t > 1e-9), t, np.inf)
    pts = origin + t[..., None] * dirs
    ok = bounds_fn(pts)
    return np.where(ok, t, np.inf)


def render_scene(
    width: int,
    height: int,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    cam_pos,
    cam_tilt: float,
    boxes: list[dict],
    wall_x: float | None = None,
    floor_span: float = 40.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Z-buffer of boxes plus floor (z=0) and an optional wall plane at x=wall_x.

    Returns (depth, owner): depth is the camera-frame z per pixel (0 where
    nothing was hit); owner is -1 (nothing), box index, ``len(boxes)`` for the
    floor, and ``len(boxes)+1`` for the wall. Boxes are dicts with center,
    size, yaw.
    """
    axes = camera_axes(cam_tilt)
    origin = np.asarray(cam_pos, dtype=np.float64)
    uu, vv = np.meshgrid(np.arange(width), np.arange(height))
    dir_cam = np.stack(
        [(uu - cx) / fx, (vv - cy) / fy, np.ones_like(uu, dtype=np.float64)], axis=-1
    )
    dirs = dir_cam @ axes.T  # world directions; camera-frame z equals the ray t

    layers = []
    for b in boxes:
        layers.append(_ray_box(origin, dirs, b["center"], b["size"], b.get("yaw", 0.0)))
    layers.append(
        _ray_quad(
            origin, dirs, [0.0, 0.0, 0.0], [0.0, 0.0, 1.0],
            lambda p: (np.abs(p[..., 0]) <= floor_span) & (np.abs(p[..., 1]) <= floor_span),
        )
    )
    if wall_x is not None:
        layers.append(
            _ray_quad(
                origin, dirs, [wall_x, 0.0, 0.0], [-1.0, 0.0, 0.0],
                lambda p: (np.abs(p[..., 1]) <= floor_span) & (p[..., 2] >= 0) & (p[..., 2] <= 10),
            )
        )
    stack = np.stack(layers)
    owner = np.argmin(stack, axis=0)
    depth = stack[owner, np.arange(height)[:, None], np.arange(width)[None, :]]
    owner = np.where(np.isfinite(depth), owner, -1)
    depth = np.where(np.isfinite(depth), depth, 0.0)
    return depth.astype(np.float32), owner


# -- the full twin fixture -------------------------------------------------------------


# Layout tuned so every box's full AABB is observable: camera high enough
# that all tops are seen at non-grazing angles, fronts unobstructed for at
# least one column strip, and the shelf rear flush with the wall.
TWIN_LAYOUT = [
    # id, category, size (x, y, z), center x, center y, yaw snapshot index
    ("tab_0", "table", (0.80, 1.40, 0.75), 2.95, 1.05, 0),
    ("cab_0", "cabinet", (0.70, 0.90, 1.30), 3.05, -0.85, 0),
    ("box_0", "crate", (0.55, 0.55, 0.50), 4.05, -0.10, 1),
    ("frg_0", "fridge", (0.75, 0.85, 1.85), 4.35, -1.70, 0),
    ("sof_0", "sofa", (0.90, 1.90, 0.85), 4.45, 1.35, 0),
    ("shf_0", "shelf", (0.60, 1.00, 1.80), 4.90, -0.60, 0),
]

SNAPSHOT_YAWS = [0.0, math.pi / 2, math.pi, -math.pi / 2]

CAMERA = dict(width=1280, height=960, fx=1040.0, fy=1040.0, cx=639.5, cy=479.5)
CAM_POS = (0.0, 0.0, 4.0)
CAM_TILT = 0.76
WALL_X = 5.2


def quat_about_z(angle: float) -> list[float]:
    return [math.cos(angle / 2), 0.0, 0.0, math.sin(angle / 2)]


def build_twin_fixture(root: Path, seed: int = 7) -> tuple[Path, Path, dict]:
    """Six ground-truth boxes on a floor with a rear wall; an asset DB whose
    snapshot grids contain each object's exact feature grid ("twin" assets)
    plus per-category distractors.

    Returns (bundle_dir, db_dir, ground truth description) where the ground
    truth carries per-object center/size/yaw plus the scene layout.
    """
    rng = np.random.default_rng(seed)
    hp, wp, dv = 3, 3, 8
    categories = sorted({cat for _, cat, *_ in TWIN_LAYOUT})
    d_text = len(categories) + 1
    cat_emb = {c: unit_vector(d_text, i) for i, c in enumerate(categories)}

    gt_objects = []
    boxes = []
    for oid, cat, size, cx_, cy_, yaw_idx in TWIN_LAYOUT:
        yaw = SNAPSHOT_YAWS[yaw_idx]
        center = (cx_, cy_, size[2] / 2)
        boxes.append({"center": center, "size": size, "yaw": yaw})
        gt_objects.append(
            {
                "id": oid,
                "category": cat,
                "asset_id": f"{oid}_twin",
                "center": center,
                "size": size,
                "yaw": yaw,
                "snapshot_index": yaw_idx,
            }
        )

    # per-object snapshot grids; the snapshot at the true yaw is the object's grid
    assets = []
    for g in gt_objects:
        snaps = []
        for s, yaw in enumerate(SNAPSHOT_YAWS):
            snaps.append(
                {
                    "orientation": quat_about_z(yaw),
                    "features": random_unit_grid(rng, hp, wp, dv),
                    "representative": s == 0,
                }
            )
        assets.append(
            {
                "id": g["asset_id"],
                "category": g["category"],
                "category_embedding": cat_emb[g["category"]],
                "canonical_extents": list(g["size"]),
                "snapshots": snaps,
            }
        )
        g["features"] = assets[-1]["snapshots"][g["snapshot_index"]]["features"]
    # distractors: same categories, different grids
    for i, cat in enumerate(categories):
        assets.append(
            {
                "id": f"distractor_{cat}",
                "category": cat,
                "category_embedding": cat_emb[cat],
                "canonical_extents": [0.5, 0.5, 0.5],
                "snapshots": [
                    {
                        "orientation": quat_about_z(yaw),
                        "features": random_unit_grid(rng, hp, wp, dv),
                        "representative": s == 0,
                    }
                    for s, yaw in enumerate(SNAPSHOT_YAWS)
                ],
            }
        )

    depth, owner = render_scene(
        CAMERA["width"], CAMERA["height"], CAMERA["fx"], CAMERA["fy"],
        CAMERA["cx"], CAMERA["cy"], CAM_POS, CAM_TILT, boxes, wall_x=WALL_X,
    )
    floor_mask = owner == len(boxes)
    wall_mask = owner == len(boxes) + 1

    bundle_objects = []
    for i, g in enumerate(gt_objects):
        mask = owner == i
        assert mask.sum() > 200, f"object {g['id']} barely visible: {mask.sum()} px"
        bundle_objects.append(
            {
                "id": g["id"],
                "label": g["category"],
                "label_embedding": cat_emb[g["category"]],
                "mask": mask,
                "features": g["features"],
            }
        )

    bundle_dir = write_bundle_dir(
        root / "bundle",
        CAMERA,
        depth,
        bundle_objects,
        wall_masks=[wall_mask],
        floor_mask=floor_mask,
    )
    db_dir = write_asset_db_dir(root / "db", assets)
    gt = {
        "objects": gt_objects,
        "camera": {"pos": CAM_POS, "tilt": CAM_TILT},
        "wall_x": WALL_X,
    }
    return bundle_dir, db_dir, gt


def gt_scene_json(gt: dict) -> dict:
    """The ground-truth layout as a scene description payload (world frame)."""
    objects = []
    for g in gt["objects"]:
        objects.append(
            {
                "source_object_id": g["id"],
                "asset_id": g["asset_id"],
                "position": [float(x) for x in g["center"]],
                "orientation": quat_about_z(g["yaw"]),
                "scale": [1.0, 1.0, 1.0],
                "mount_type": "on_support",
                "support": "floor",
            }
        )
    return {
        "objects": objects,
        "floor_plane": {"point": [0.0, 0.0, 0.0], "normal": [0.0, 0.0, 1.0]},
        "wall_planes": [
            {"point": [gt["wall_x"], 0.0, 1.0], "normal": [-1.0, 0.0, 0.0]}
        ],
        "provenance": {"bundle_hash": "", "selector_path": "", "seed": 0},
    }
