"""Readers and writers for the three persistent formats.

Binary arrays are little-endian 32-bit floats, row-major; shapes live only in
the manifest. Masks are u8 (0/255). Scenes are canonical UTF-8 JSON: reading a
canonical file and writing it back is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from ..errors import (
    DuplicateObjectId,
    MissingFile,
    NonFiniteValue,
    ShapeMismatch,
    UnresolvedSupport,
    ValidationFailed,
)
from .types import (
    AssetDatabase,
    AssetEntry,
    AssetSnapshot,
    CameraIntrinsics,
    DelegateAnnotations,
    DelegateChoice,
    DepthMap,
    ExtractionBundle,
    JointSpec,
    LinkSpec,
    MountType,
    ObjectRecord,
    OrientedBoxSpec,
    PlacedObject,
    PlaneSpec,
    Provenance,
    SceneDescription,
)
from .validate import validate_asset_db, validate_bundle, validate_scene

SCHEMA_VERSION = 1


# -- low-level helpers ----------------------------------------------------------

def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingFile(str(path))
    return path


def _load_json(path: Path) -> dict:
    with open(_require(path), encoding="utf-8") as fh:
        return json.load(fh)


def _read_f32(directory: Path, ref: dict, *, field: str, finite: bool = True) -> np.ndarray:
    path = _require(directory / ref["file"])
    shape = tuple(int(s) for s in ref["shape"])
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != math.prod(shape):
        raise ShapeMismatch(
            f"{path.name}: {raw.size} values on disk, manifest {field} declares {shape}"
        )
    arr = raw.reshape(shape)
    if finite and not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{path.name}: non-finite value in {field}")
    return arr


def _read_mask(directory: Path, ref: dict, *, field: str) -> np.ndarray:
    path = _require(directory / ref["file"])
    shape = tuple(int(s) for s in ref["shape"])
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size != math.prod(shape):
        raise ShapeMismatch(
            f"{path.name}: {raw.size} bytes on disk, manifest {field} declares {shape}"
        )
    return raw.reshape(shape) != 0


def _write_f32(path: Path, arr: np.ndarray) -> None:
    np.asarray(arr, dtype="<f4").tofile(path)


def _write_mask(path: Path, mask: np.ndarray) -> None:
    (np.asarray(mask, dtype=bool).astype(np.uint8) * 255).tofile(path)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _dump_canonical(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, ensure_ascii=False) + "\n"


# -- content hashing -------------------------------------------------------------

def bundle_hash(path: str | os.PathLike) -> str:
    """SHA-256 over the manifest plus every referenced file, in sorted order.

    Identical bytes on disk always hash identically, independent of read
    order or platform.
    """
    directory = Path(path)
    manifest_path = _require(directory / "manifest.json")
    manifest = _load_json(manifest_path)
    h = hashlib.sha256()
    h.update(manifest_path.read_bytes())
    for name in sorted(_referenced_files(manifest)):
        f = directory / name
        h.update(name.encode("utf-8") + b"\0")
        if f.exists():
            h.update(f.read_bytes())
    return h.hexdigest()


def _referenced_files(manifest: dict) -> list[str]:
    files = [manifest["depth"]["file"], manifest["floor_mask"]["file"]]
    files += [w["file"] for w in manifest.get("wall_masks", [])]
    for obj in manifest.get("objects", []):
        files += [obj["mask"]["file"], obj["features"]["file"], obj["label_embedding"]["file"]]
    if manifest.get("sidecar"):
        files.append(manifest["sidecar"])
    return files


# -- extraction bundle ------------------------------------------------------------

def read_bundle(path: str | os.PathLike) -> ExtractionBundle:
    """Read and fully validate a bundle directory."""
    directory = Path(path)
    manifest = _load_json(directory / "manifest.json")

    ki = manifest["intrinsics"]
    intrinsics = CameraIntrinsics(
        fx=float(ki["fx"]), fy=float(ki["fy"]),
        cx=float(ki["cx"]), cy=float(ki["cy"]),
        width=int(ki["width"]), height=int(ki["height"]),
    )
    expected = (intrinsics.height, intrinsics.width)

    depth_arr = _read_f32(directory, manifest["depth"], field="depth", finite=False)
    if depth_arr.shape != expected:
        raise ShapeMismatch(
            f"depth grid {depth_arr.shape} does not match intrinsics {expected}"
        )
    depth = DepthMap.from_values(depth_arr)

    floor_mask = _read_mask(directory, manifest["floor_mask"], field="floor_mask")
    wall_masks = tuple(
        _read_mask(directory, ref, field=f"wall_masks[{i}]")
        for i, ref in enumerate(manifest.get("wall_masks", []))
    )

    objects = []
    seen: set[str] = set()
    for entry in manifest.get("objects", []):
        oid = str(entry["id"])
        if oid in seen:
            raise DuplicateObjectId(f"object id {oid!r} appears more than once")
        seen.add(oid)
        objects.append(
            ObjectRecord(
                id=oid,
                label=str(entry.get("label", "")),
                label_embedding=_read_f32(
                    directory, entry["label_embedding"], field=f"objects[{oid}].label_embedding"
                ),
                mask=_read_mask(directory, entry["mask"], field=f"objects[{oid}].mask"),
                features=_read_f32(
                    directory, entry["features"], field=f"objects[{oid}].features"
                ),
                articulated=bool(entry.get("articulated", False)),
            )
        )

    sidecar = None
    if manifest.get("sidecar"):
        sidecar = read_sidecar(directory / manifest["sidecar"])

    bundle = ExtractionBundle(
        intrinsics=intrinsics,
        depth=depth,
        objects=tuple(objects),
        wall_masks=wall_masks,
        floor_mask=floor_mask,
        sidecar=sidecar,
        source_hash=bundle_hash(directory),
    )
    violations = validate_bundle(bundle)
    if violations:
        raise ValidationFailed(violations)
    return bundle


def read_sidecar(path: str | os.PathLike) -> DelegateAnnotations:
    payload = _load_json(Path(path))
    by_object = {}
    for oid, raw in payload.get("objects", {}).items():
        by_object[str(oid)] = DelegateChoice(
            chosen_model=raw.get("chosen_model"),
            chosen_orientation_index=raw.get("chosen_orientation_index"),
            mount_type=raw.get("mount_type"),
            wall_index=raw.get("wall_index"),
        )
    return DelegateAnnotations(by_object)


# -- asset database ----------------------------------------------------------------

def read_asset_db(path: str | os.PathLike) -> AssetDatabase:
    directory = Path(path)
    manifest = _load_json(directory / "db_manifest.json")

    assets = []
    for entry in manifest.get("assets", []):
        aid = str(entry["id"])
        snaps_raw = entry.get("snapshots", [])
        if len(snaps_raw) < 1:
            raise ShapeMismatch(f"asset {aid!r} declares zero snapshots; need N_snap >= 1")
        snapshots = tuple(
            AssetSnapshot(
                orientation=np.asarray(s["orientation"], dtype=np.float64),
                features=_read_f32(
                    directory, s["features"], field=f"assets[{aid}].snapshots[{i}]"
                ),
                representative=bool(s.get("representative", False)),
            )
            for i, s in enumerate(snaps_raw)
        )
        links = tuple(
            LinkSpec(
                name=str(l["name"]),
                joint=JointSpec(
                    joint_type=str(l["joint_type"]),
                    axis=np.asarray(l["axis"], dtype=np.float64),
                    origin=np.asarray(l["origin"], dtype=np.float64),
                    limits=(float(l["limits"][0]), float(l["limits"][1])),
                ),
                mesh_file=l.get("mesh"),
            )
            for l in entry.get("links", [])
        )
        cbox = None
        if entry.get("collision_box"):
            cb = entry["collision_box"]
            cbox = OrientedBoxSpec(
                center=np.asarray(cb["center"], dtype=np.float64),
                size=np.asarray(cb["size"], dtype=np.float64),
                orientation=np.asarray(cb["orientation"], dtype=np.float64),
            )
        assets.append(
            AssetEntry(
                id=aid,
                category=str(entry["category"]),
                category_embedding=_read_f32(
                    directory, entry["category_embedding"], field=f"assets[{aid}].category_embedding"
                ),
                canonical_extents=np.asarray(entry["canonical_extents"], dtype=np.float64),
                snapshots=snapshots,
                door_count=int(entry.get("door_count", 0)),
                drawer_count=int(entry.get("drawer_count", 0)),
                links=links,
                collision_box=cbox,
            )
        )

    db = AssetDatabase(assets=tuple(assets), root=str(directory))
    violations = validate_asset_db(db)
    if violations:
        raise ValidationFailed(violations)
    return db


# -- scene description ----------------------------------------------------------------

def read_scene(path: str | os.PathLike) -> SceneDescription:
    payload = _load_json(Path(path))
    objects = tuple(
        PlacedObject(
            source_object_id=str(o["source_object_id"]),
            asset_id=str(o["asset_id"]),
            position=np.asarray(o["position"], dtype=np.float64),
            orientation=np.asarray(o["orientation"], dtype=np.float64),
            scale=np.asarray(o["scale"], dtype=np.float64),
            mount_type=MountType.parse(str(o["mount_type"])),
            support=str(o["support"]),
        )
        for o in payload.get("objects", [])
    )
    scene = SceneDescription(
        objects=objects,
        floor_plane=_plane_from(payload["floor_plane"]),
        wall_planes=tuple(_plane_from(p) for p in payload.get("wall_planes", [])),
        provenance=Provenance(
            bundle_hash=str(payload.get("provenance", {}).get("bundle_hash", "")),
            selector_path=str(payload.get("provenance", {}).get("selector_path", "")),
            seed=int(payload.get("provenance", {}).get("seed", 0)),
        ),
    )
    violations = validate_scene(scene)
    unresolved = [v for v in violations if v.code in ("UnresolvedSupport", "UnresolvedWall")]
    if unresolved:
        raise UnresolvedSupport("; ".join(str(v) for v in unresolved))
    if violations:
        raise ValidationFailed(violations)
    return scene


def _plane_from(raw: dict) -> PlaneSpec:
    return PlaneSpec(
        point=np.asarray(raw["point"], dtype=np.float64),
        normal=np.asarray(raw["normal"], dtype=np.float64),
    )


def scene_payload(scene: SceneDescription) -> dict:
    return {
        "objects": [
            {
                "source_object_id": o.source_object_id,
                "asset_id": o.asset_id,
                "position": o.position,
                "orientation": o.orientation,
                "scale": o.scale,
                "mount_type": str(o.mount_type),
                "support": o.support,
            }
            for o in scene.objects
        ],
        "floor_plane": {"point": scene.floor_plane.point, "normal": scene.floor_plane.normal},
        "wall_planes": [
            {"point": p.point, "normal": p.normal} for p in scene.wall_planes
        ],
        "provenance": {
            "bundle_hash": scene.provenance.bundle_hash,
            "selector_path": scene.provenance.selector_path,
            "seed": scene.provenance.seed,
        },
    }


def write_scene(scene: SceneDescription, path: str | os.PathLike) -> None:
    """Write a scene as canonical JSON (atomic: temp file + rename)."""
    _atomic_write_text(Path(path), _dump_canonical(scene_payload(scene)))
