"""Scene compilation: placement, mounting, post-processing, randomization."""

from .pipeline import (
    CompileConfig,
    CompileReport,
    RandomizationSpec,
    compile_scene,
    randomize_scene,
    world_frame_from_floor,
)
from .place import (
    align_to_wall,
    classify_mount,
    place_object,
    world_aabb,
    world_box,
    world_collision_box,
)
from .post import depenetrate, infer_supports, qualifies_on_top, resolve_xy

__all__ = [
    "CompileConfig",
    "CompileReport",
    "RandomizationSpec",
    "align_to_wall",
    "classify_mount",
    "compile_scene",
    "depenetrate",
    "infer_supports",
    "place_object",
    "qualifies_on_top",
    "randomize_scene",
    "resolve_xy",
    "world_aabb",
    "world_box",
    "world_collision_box",
    "world_frame_from_floor",
]
