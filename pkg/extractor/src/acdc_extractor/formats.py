"""Writers for the scene compiler's on-disk interfaces.

These implement the published bundle / asset-database layouts directly
(little-endian float32 arrays, u8 0/255 masks, shapes declared in the
manifest); the compiler's `validate` command is the cross-check.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_bundle(
    out_dir: Path,
    intrinsics: dict,
    depth: np.ndarray,
    objects: list[dict],
    floor_mask: np.ndarray,
    wall_masks: list[np.ndarray],
    sidecar: dict | None = None,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h, w = depth.shape
    np.asarray(depth, dtype="<f4").tofile(out_dir / "depth.f32")
    (np.asarray(floor_mask, bool).astype(np.uint8) * 255).tofile(out_dir / "floor.u8")
    for i, mask in enumerate(wall_masks):
        (np.asarray(mask, bool).astype(np.uint8) * 255).tofile(out_dir / f"wall_{i}.u8")

    entries = []
    for obj in objects:
        oid = obj["id"]
        (np.asarray(obj["mask"], bool).astype(np.uint8) * 255).tofile(
            out_dir / f"mask_{oid}.u8"
        )
        np.asarray(obj["features"], dtype="<f4").tofile(out_dir / f"feat_{oid}.f32")
        np.asarray(obj["label_embedding"], dtype="<f4").tofile(
            out_dir / f"label_emb_{oid}.f32"
        )
        entries.append(
            {
                "id": oid,
                "label": obj["label"],
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
        "intrinsics": {
            "fx": float(intrinsics["fx"]),
            "fy": float(intrinsics["fy"]),
            "cx": float(intrinsics["cx"]),
            "cy": float(intrinsics["cy"]),
            "width": int(intrinsics["width"]),
            "height": int(intrinsics["height"]),
        },
        "depth": {"file": "depth.f32", "shape": [h, w]},
        "floor_mask": {"file": "floor.u8", "shape": [h, w]},
        "wall_masks": [
            {"file": f"wall_{i}.u8", "shape": [h, w]} for i in range(len(wall_masks))
        ],
        "objects": entries,
    }
    if sidecar is not None:
        _write_json(out_dir / "sidecar.json", sidecar)
        manifest["sidecar"] = "sidecar.json"
    _write_json(out_dir / "manifest.json", manifest)
    return out_dir


def attach_sidecar(bundle_dir: Path, sidecar: dict) -> None:
    """Write sidecar.json into an existing bundle and reference it from the
    manifest (the annotation pass runs after matching, so the sidecar is
    attached to an already-written bundle)."""
    bundle_dir = Path(bundle_dir)
    manifest_path = bundle_dir / "manifest.json"
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    _write_json(bundle_dir / "sidecar.json", sidecar)
    manifest["sidecar"] = "sidecar.json"
    _write_json(manifest_path, manifest)


def write_asset_db(out_dir: Path, assets: list[dict]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for asset in assets:
        aid = asset["id"]
        np.asarray(asset["category_embedding"], dtype="<f4").tofile(
            out_dir / f"catemb_{aid}.f32"
        )
        snaps = []
        for s, snap in enumerate(asset["snapshots"]):
            fname = f"snap_{aid}_{s}.f32"
            np.asarray(snap["features"], dtype="<f4").tofile(out_dir / fname)
            snaps.append(
                {
                    "orientation": [float(x) for x in snap["orientation"]],
                    "representative": bool(snap["representative"]),
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
            (out_dir / name).write_text(text, encoding="utf-8")
    _write_json(out_dir / "db_manifest.json", {"schema_version": 1, "assets": entries})
    return out_dir
