"""Persistent data contracts: extraction bundle, asset database, scene description.

All values are immutable after construction and safe to share across threads.
Quaternions are scalar-first (w, x, y, z).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch


def _freeze(obj, **arrays):
    for name, (value, dtype, shape) in arrays.items():
        arr = np.asarray(value, dtype=dtype)
        if shape is not None and arr.shape != shape:
            raise ShapeMismatch(f"{type(obj).__name__}.{name}: expected shape {shape}, got {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(obj, name, arr)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int


@dataclass(frozen=True)
class DepthMap:
    """Depth samples in meters; ``valid`` marks usable pixels. On disk,
    invalid pixels are stored as 0."""

    values: np.ndarray  # (h, w) float32
    valid: np.ndarray  # (h, w) bool

    def __post_init__(self):
        _freeze(self, values=(self.values, np.float32, None))
        _freeze(self, valid=(self.valid, bool, self.values.shape))

    @classmethod
    def from_values(cls, values) -> "DepthMap":
        values = np.asarray(values, dtype=np.float32)
        valid = np.isfinite(values) & (values > 0)
        return cls(values, valid)


@dataclass(frozen=True)
class ObjectRecord:
    id: str
    label: str
    label_embedding: np.ndarray  # (d_text,) unit
    mask: np.ndarray  # (h, w) bool, image resolution
    features: np.ndarray  # (h_p, w_p, d_vis) float32
    articulated: bool = False

    def __post_init__(self):
        _freeze(self, label_embedding=(self.label_embedding, np.float32, None))
        _freeze(self, mask=(self.mask, bool, None))
        _freeze(self, features=(self.features, np.float32, None))

    def feature_grid(self) -> np.ndarray:
        """Features flattened to (h_p*w_p, d_vis)."""
        return self.features.reshape(-1, self.features.shape[-1])


@dataclass(frozen=True)
class DelegateChoice:
    """Per-object sidecar annotations from the delegate (VLM) pass."""

    chosen_model: str | None = None
    chosen_orientation_index: int | None = None
    mount_type: str | None = None  # wall_mounted | on_support | mixture
    wall_index: int | None = None


@dataclass(frozen=True)
class DelegateAnnotations:
    by_object: dict[str, DelegateChoice] = field(default_factory=dict)

    def get(self, object_id: str) -> DelegateChoice:
        return self.by_object.get(object_id, DelegateChoice())


@dataclass(frozen=True)
class ExtractionBundle:
    intrinsics: CameraIntrinsics
    depth: DepthMap
    objects: tuple[ObjectRecord, ...]
    wall_masks: tuple[np.ndarray, ...]
    floor_mask: np.ndarray
    sidecar: DelegateAnnotations | None = None
    source_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        walls = []
        for m in self.wall_masks:
            m = np.asarray(m, dtype=bool)
            m.flags.writeable = False
            walls.append(m)
        object.__setattr__(self, "wall_masks", tuple(walls))
        _freeze(self, floor_mask=(self.floor_mask, bool, None))

    def object_by_id(self, object_id: str) -> ObjectRecord:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(object_id)


@dataclass(frozen=True)
class JointSpec:
    joint_type: str  # revolute | prismatic
    axis: np.ndarray  # (3,) unit
    origin: np.ndarray  # (3,) meters
    limits: tuple[float, float]  # radians or meters

    def __post_init__(self):
        _freeze(self, axis=(self.axis, np.float64, (3,)))
        _freeze(self, origin=(self.origin, np.float64, (3,)))
        object.__setattr__(self, "limits", (float(self.limits[0]), float(self.limits[1])))


@dataclass(frozen=True)
class LinkSpec:
    name: str
    joint: JointSpec
    mesh_file: str | None = None  # tri-text mesh, relative to the DB dir


@dataclass(frozen=True)
class AssetSnapshot:
    orientation: np.ndarray  # (4,) unit quaternion (w, x, y, z)
    features: np.ndarray  # (h_p, w_p, d_vis) float32
    representative: bool = False

    def __post_init__(self):
        _freeze(self, orientation=(self.orientation, np.float64, (4,)))
        _freeze(self, features=(self.features, np.float32, None))

    def feature_grid(self) -> np.ndarray:
        return self.features.reshape(-1, self.features.shape[-1])


@dataclass(frozen=True)
class AssetEntry:
    id: str
    category: str
    category_embedding: np.ndarray  # (d_text,) unit
    canonical_extents: np.ndarray  # (3,) meters at unit scale
    snapshots: tuple[AssetSnapshot, ...]
    door_count: int = 0
    drawer_count: int = 0
    links: tuple[LinkSpec, ...] = ()
    collision_box: "OrientedBoxSpec | None" = None

    def __post_init__(self):
        _freeze(self, category_embedding=(self.category_embedding, np.float32, None))
        _freeze(self, canonical_extents=(self.canonical_extents, np.float64, (3,)))
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        object.__setattr__(self, "links", tuple(self.links))

    @property
    def articulated(self) -> bool:
        return self.door_count + self.drawer_count > 0

    def representative_snapshot(self) -> AssetSnapshot:
        for s in self.snapshots:
            if s.representative:
                return s
        raise ShapeMismatch(f"asset {self.id} has no representative snapshot")


@dataclass(frozen=True)
class OrientedBoxSpec:
    """Collision box at unit scale, in the asset frame."""

    center: np.ndarray  # (3,)
    size: np.ndarray  # (3,) full extents
    orientation: np.ndarray  # (4,) quaternion

    def __post_init__(self):
        _freeze(self, center=(self.center, np.float64, (3,)))
        _freeze(self, size=(self.size, np.float64, (3,)))
        _freeze(self, orientation=(self.orientation, np.float64, (4,)))


@dataclass(frozen=True)
class AssetDatabase:
    assets: tuple[AssetEntry, ...]
    root: str = ""  # directory the DB was loaded from, for mesh lookups

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))

    def asset_by_id(self, asset_id: str) -> AssetEntry:
        for a in self.assets:
            if a.id == asset_id:
                return a
        raise KeyError(asset_id)

    def categories(self) -> list[str]:
        return sorted({a.category for a in self.assets})


# -- scene description ---------------------------------------------------------

MOUNT_TYPES = ("wall_mounted", "on_support", "mixture")


@dataclass(frozen=True)
class MountType:
    kind: str  # wall_mounted | on_support | mixture
    wall_index: int | None = None

    def __post_init__(self):
        if self.kind not in MOUNT_TYPES:
            raise ValueError(f"unknown mount type {self.kind!r}")

    def __str__(self) -> str:
        if self.wall_index is None:
            return self.kind
        return f"{self.kind}:{self.wall_index}"

    @classmethod
    def parse(cls, text: str) -> "MountType":
        if ":" in text:
            kind, idx = text.split(":", 1)
            return cls(kind, int(idx))
        return cls(text)


@dataclass(frozen=True)
class PlacedObject:
    source_object_id: str
    asset_id: str
    position: np.ndarray  # (3,) meters
    orientation: np.ndarray  # (4,) unit quaternion
    scale: np.ndarray  # (3,) per-axis multipliers
    mount_type: MountType
    support: str  # floor | wall:<k> | object:<id>

    def __post_init__(self):
        _freeze(self, position=(self.position, np.float64, (3,)))
        _freeze(self, orientation=(self.orientation, np.float64, (4,)))
        _freeze(self, scale=(self.scale, np.float64, (3,)))


@dataclass(frozen=True)
class PlaneSpec:
    point: np.ndarray  # (3,)
    normal: np.ndarray  # (3,) unit

    def __post_init__(self):
        _freeze(self, point=(self.point, np.float64, (3,)))
        _freeze(self, normal=(self.normal, np.float64, (3,)))


@dataclass(frozen=True)
class Provenance:
    bundle_hash: str = ""
    selector_path: str = ""
    seed: int = 0


@dataclass(frozen=True)
class SceneDescription:
    objects: tuple[PlacedObject, ...]
    floor_plane: PlaneSpec
    wall_planes: tuple[PlaneSpec, ...]
    provenance: Provenance = Provenance()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "wall_planes", tuple(self.wall_planes))

    def object_by_source(self, source_object_id: str) -> PlacedObject:
        for o in self.objects:
            if o.source_object_id == source_object_id:
                return o
        raise KeyError(source_object_id)
