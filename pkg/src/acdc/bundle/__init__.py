"""Persistent data contracts and their (de)serialization."""

from .io import (
    bundle_hash,
    read_asset_db,
    read_bundle,
    read_scene,
    read_sidecar,
    scene_payload,
    write_scene,
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
from .validate import validate, validate_asset_db, validate_bundle, validate_scene

__all__ = [
    "AssetDatabase",
    "AssetEntry",
    "AssetSnapshot",
    "CameraIntrinsics",
    "DelegateAnnotations",
    "DelegateChoice",
    "DepthMap",
    "ExtractionBundle",
    "JointSpec",
    "LinkSpec",
    "MountType",
    "ObjectRecord",
    "OrientedBoxSpec",
    "PlacedObject",
    "PlaneSpec",
    "Provenance",
    "SceneDescription",
    "bundle_hash",
    "read_asset_db",
    "read_bundle",
    "read_scene",
    "read_sidecar",
    "scene_payload",
    "validate",
    "validate_asset_db",
    "validate_bundle",
    "validate_scene",
    "write_scene",
]
