"""Full scene compilation and domain randomization.

Stage order is fixed: plane fitting, placement, mount classification, wall
alignment, support inference, de-penetration, xy resolution, provenance
stamping. Each stage reads the previous stage's full output.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .. import rotation
from ..bundle.types import (
    AssetDatabase,
    ExtractionBundle,
    PlacedObject,
    PlaneSpec,
    Provenance,
    SceneDescription,
)
from ..errors import AcdcError, DegenerateInput, MissingRank
from ..geometry import Plane, PointCloud, dbscan_filter, fit_plane_ransac, object_points, unproject
from ..matching import CousinMatch
from .place import classify_mount, place_object, align_to_wall
from .post import depenetrate, infer_supports, resolve_xy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompileConfig:
    seed: int = 0
    selector_path: str = "embedding_only"
    ransac_iters: int = 1000
    ransac_tol: float = 0.01
    dbscan_eps: float | None = None  # None: scale-adaptive
    dbscan_min_pts: int = 10
    refine_orientation: bool = False
    wall_proximity: float = 0.05
    floor_clearance: float = 0.10
    resolve_max_iters: int = 100
    resolve_margin: float = 1e-3


@dataclass(frozen=True)
class RandomizationSpec:
    seed: int = 0
    xy_jitter: float = 0.0  # +- meters
    yaw_jitter: float = 0.0  # +- radians
    scale_range: float = 0.0  # +- fraction, < 1
    instance_swap: bool = False

    def __post_init__(self):
        if min(self.xy_jitter, self.yaw_jitter, self.scale_range) < 0:
            raise ValueError("randomization ranges must be non-negative")
        if self.scale_range >= 1:
            raise ValueError("scale_range must be < 1")


@dataclass
class CompileReport:
    warnings: list[str] = field(default_factory=list)
    resolve_iterations: int = 0
    resolve_converged: bool = True
    supports: dict[str, str] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def payload(self) -> dict:
        return {
            "provenance": dict(self.provenance),
            "warnings": list(self.warnings),
            "resolve_iterations": self.resolve_iterations,
            "resolve_converged": self.resolve_converged,
            "supports": dict(self.supports),
        }


class _WarningCollector(logging.Handler):
    def __init__(self, sink: list[str]):
        super().__init__(level=logging.WARNING)
        self.sink = sink

    def emit(self, record):
        self.sink.append(record.getMessage())


class _collect_warnings:
    """Route package warnings into a report while a stage runs."""

    def __init__(self, report: CompileReport | None):
        self.handler = _WarningCollector(report.warnings) if report is not None else None

    def __enter__(self):
        if self.handler is not None:
            logging.getLogger("acdc").addHandler(self.handler)
        return self

    def __exit__(self, *exc):
        if self.handler is not None:
            logging.getLogger("acdc").removeHandler(self.handler)
        return False


def world_frame_from_floor(floor_cam: Plane) -> tuple[np.ndarray, np.ndarray]:
    """(rotation M, camera foot point) mapping camera coordinates to the scene
    frame: floor at z=0 with +z up, +x the camera's horizontal view direction,
    origin under the camera."""
    z_w = floor_cam.normal  # oriented toward the camera, i.e. up
    forward = np.array([0.0, 0.0, 1.0])
    x_dir = forward - float(forward @ z_w) * z_w
    if np.linalg.norm(x_dir) < 1e-6:
        fallback = np.array([0.0, 1.0, 0.0])
        x_dir = fallback - float(fallback @ z_w) * z_w
    x_w = x_dir / np.linalg.norm(x_dir)
    y_w = np.cross(z_w, x_w)
    m = np.vstack([x_w, y_w, z_w])
    height = float(-floor_cam.point @ z_w)  # camera origin to floor
    foot = -height * z_w
    return m, foot


def _to_world(m: np.ndarray, foot: np.ndarray, cloud: PointCloud) -> PointCloud:
    return PointCloud((cloud.points - foot) @ m.T, cloud.pixels)


_PLANE_FIT_CAP = 40_000  # plane clouds are stride-subsampled beyond this


def _fit_plane(
    cloud: PointCloud, mask, cfg: CompileConfig, what: str
) -> tuple[Plane, PointCloud]:
    pts = object_points(cloud, mask)
    if len(pts) < 3:
        raise DegenerateInput(f"{what}: fewer than 3 valid depth points under the mask")
    if len(pts) > _PLANE_FIT_CAP:
        stride = -(-len(pts) // _PLANE_FIT_CAP)
        pts = PointCloud(pts.points[::stride])
    plane, _ = fit_plane_ransac(pts, cfg.ransac_tol, cfg.ransac_iters, cfg.seed)
    return plane, pts


def compile_scene(
    bundle: ExtractionBundle,
    matches: list[CousinMatch],
    cousin_rank: int,
    db: AssetDatabase,
    cfg: CompileConfig = CompileConfig(),
    report: CompileReport | None = None,
) -> SceneDescription:
    """Compile matched cousins into a physically plausible scene description.

    ``cousin_rank`` selects which ranked cousin each object uses. Deterministic
    for fixed inputs and seed. Errors are re-raised with the object id and
    stage in the message.
    """
    if report is None:
        report = CompileReport()
    by_object = {m.object_id: m for m in matches}

    with _collect_warnings(report):
        cloud_cam = unproject(bundle.depth, bundle.intrinsics)
        floor_cam, _ = _fit_plane(cloud_cam, bundle.floor_mask, cfg, "floor")
        m, foot = world_frame_from_floor(floor_cam)
        cloud = _to_world(m, foot, cloud_cam)

        floor = Plane((floor_cam.point - foot) @ m.T, floor_cam.normal @ m.T)
        walls = []
        for w, wall_mask in enumerate(bundle.wall_masks):
            wall_cam, _ = _fit_plane(cloud_cam, wall_mask, cfg, f"wall {w}")
            walls.append(Plane((wall_cam.point - foot) @ m.T, wall_cam.normal @ m.T))

        placed: list[PlacedObject] = []
        entries = {}
        for obj in bundle.objects:
            match = by_object.get(obj.id)
            if match is None:
                raise MissingRank(f"object {obj.id!r}: no match entry supplied")
            if cousin_rank >= len(match.cousins):
                raise MissingRank(
                    f"object {obj.id!r}: rank {cousin_rank} requested but only "
                    f"{len(match.cousins)} cousins matched"
                )
            cousin = match.cousins[cousin_rank]
            entry = db.asset_by_id(cousin.asset_id)
            entries[entry.id] = entry
            try:
                pts = object_points(cloud, obj.mask)
                if len(pts) == 0:
                    raise DegenerateInput("mask covers no valid depth pixels")
                pts = dbscan_filter(pts, cfg.dbscan_eps, cfg.dbscan_min_pts)
                placed.append(
                    place_object(
                        obj.id, cousin, pts, entry,
                        refine_orientation=cfg.refine_orientation,
                    )
                )
            except AcdcError as exc:
                raise type(exc)(f"object {obj.id!r} (placement): {exc}") from exc

        sidecar = bundle.sidecar
        classified = []
        for p in placed:
            others = [(o, entries[o.asset_id]) for o in placed]
            choice = sidecar.get(p.source_object_id) if sidecar is not None else None
            mount = classify_mount(
                p, entries[p.asset_id], walls, floor, others, choice,
                cfg.wall_proximity, cfg.floor_clearance,
            )
            classified.append(dataclasses.replace(p, mount_type=mount))
        placed = classified

        placed = [
            align_to_wall(p, entries[p.asset_id], walls[p.mount_type.wall_index])
            if p.mount_type.kind in ("wall_mounted", "mixture")
            and p.mount_type.wall_index is not None
            else p
            for p in placed
        ]

        placed, report.supports = _post_process(placed, entries, floor, walls, cfg, report)

    provenance = Provenance(
        bundle_hash=bundle.source_hash,
        selector_path=cfg.selector_path,
        seed=cfg.seed,
    )
    report.provenance = {
        "bundle_hash": provenance.bundle_hash,
        "selector_path": provenance.selector_path,
        "seed": provenance.seed,
        "cousin_rank": cousin_rank,
    }
    return SceneDescription(
        objects=tuple(placed),
        floor_plane=PlaneSpec(floor.point, floor.normal),
        wall_planes=tuple(PlaneSpec(w.point, w.normal) for w in walls),
        provenance=provenance,
    )


def _post_process(placed, entries, floor, walls, cfg, report):
    beneath = infer_supports(placed, entries)
    placed = depenetrate(placed, beneath, entries, floor, walls)
    placed, iters, converged = resolve_xy(
        placed, entries, cfg.resolve_max_iters, cfg.resolve_margin
    )
    report.resolve_iterations = iters
    report.resolve_converged = converged
    supports = {}
    labeled = []
    for p in placed:
        if p.mount_type.kind == "wall_mounted" and p.mount_type.wall_index is not None:
            support = f"wall:{p.mount_type.wall_index}"
        elif beneath[p.source_object_id] == "floor":
            support = "floor"
        else:
            support = f"object:{beneath[p.source_object_id]}"
        supports[p.source_object_id] = support
        labeled.append(dataclasses.replace(p, support=support))
    return labeled, supports


def randomize_scene(
    scene: SceneDescription,
    spec: RandomizationSpec,
    matches: list[CousinMatch],
    db: AssetDatabase,
    cfg: CompileConfig = CompileConfig(),
    report: CompileReport | None = None,
) -> SceneDescription:
    """Kinematic (pose, scale) and instance-level randomization of a scene.

    Per object: uniform xy jitter, yaw jitter, and per-axis scale multipliers
    in [1-r, 1+r]; with instance_swap, the asset is resampled uniformly from
    the object's ranked cousin list (world extents preserved). Post-processing
    (supports, de-penetration, xy resolution) re-runs afterwards. Deterministic
    per seed; all ranges zero with swap off is the identity on poses.
    """
    if report is None:
        report = CompileReport()
    rng = np.random.default_rng(spec.seed)
    by_object = {m.object_id: m for m in matches}

    with _collect_warnings(report):
        randomized = []
        for obj in scene.objects:
            current = obj
            if spec.instance_swap:
                match = by_object.get(obj.source_object_id)
                if match is not None and len(match.cousins) > 0:
                    pick = match.cousins[int(rng.integers(0, len(match.cousins)))]
                    if pick.asset_id != current.asset_id:
                        old_entry = db.asset_by_id(current.asset_id)
                        new_entry = db.asset_by_id(pick.asset_id)
                        # keep world extents: old scale * old canonical = new scale * new canonical
                        new_scale = (
                            current.scale
                            * old_entry.canonical_extents
                            / new_entry.canonical_extents
                        )
                        current = dataclasses.replace(
                            current,
                            asset_id=pick.asset_id,
                            orientation=rotation.normalize(pick.orientation),
                            scale=new_scale,
                        )
            dx, dy = rng.uniform(-spec.xy_jitter, spec.xy_jitter, size=2)
            yaw = float(rng.uniform(-spec.yaw_jitter, spec.yaw_jitter))
            mult = rng.uniform(1.0 - spec.scale_range, 1.0 + spec.scale_range, size=3)
            current = dataclasses.replace(
                current,
                position=current.position + np.array([dx, dy, 0.0]),
                orientation=rotation.multiply(rotation.about_z(yaw), current.orientation),
                scale=current.scale * mult,
            )
            randomized.append(current)

        entries = {p.asset_id: db.asset_by_id(p.asset_id) for p in randomized}
        floor = Plane(scene.floor_plane.point, scene.floor_plane.normal)
        walls = [Plane(p.point, p.normal) for p in scene.wall_planes]
        randomized, supports = _post_process(randomized, entries, floor, walls, cfg, report)
        report.supports = supports

    provenance = dataclasses.replace(scene.provenance, seed=spec.seed)
    return SceneDescription(
        objects=tuple(randomized),
        floor_plane=scene.floor_plane,
        wall_planes=scene.wall_planes,
        provenance=provenance,
    )
