"""The extraction pipeline: image -> captions -> masks -> depth -> features
-> bundle directory in the scene compiler's format."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .adapters import patch_encoder, text_encoder, vision_stack
from .config import ExtractorConfig
from .errors import ModelUnavailable, NoObjectsDetected
from .formats import write_bundle

log = logging.getLogger(__name__)


def snapshot_descriptor(asset_id: str, orientation_index: int) -> str:
    """Content key of one asset snapshot; the mock patch encoder maps equal
    keys to equal grids, so a depicted object matches its twin exactly."""
    return f"{asset_id}#{orientation_index}"


def extract(
    image_path: str | Path,
    out_dir: str | Path,
    cfg: ExtractorConfig = ExtractorConfig(),
    intrinsics: dict | None = None,
) -> Path:
    """Run the extraction stage and write a bundle directory.

    Mock mode reads `<image>.fixture.json` beside the image and produces a
    byte-stable bundle; live mode requires model weights and raises
    ModelUnavailable in offline environments.
    """
    image_path = Path(image_path)
    stack = vision_stack(cfg)
    penc = patch_encoder(cfg)
    tenc = text_encoder(cfg)

    fixture = stack.load_fixture(image_path)
    if intrinsics is None:
        intrinsics = fixture.get("intrinsics")
    if intrinsics is None:
        if not cfg.estimate_intrinsics:
            raise ModelUnavailable(
                "no intrinsics given and estimation is disabled; pass intrinsics "
                "or enable estimate_intrinsics"
            )
        raise ModelUnavailable("intrinsics estimation needs a live model")

    captions = stack.captions(fixture)
    if not captions:
        raise NoObjectsDetected(f"{image_path.name}: no objects detected")
    depth, masks, floor_mask, wall_masks = stack.detect(fixture)

    objects = []
    for i, obj in enumerate(fixture["objects"]):
        label = stack.select_label(captions, i)
        depicts = obj.get("depicts", {})
        descriptor = snapshot_descriptor(
            depicts.get("asset", obj["id"]), int(depicts.get("orientation_index", 0))
        )
        if not masks[i].any():
            log.warning("object %s: mask is empty in the rendered view; skipped", obj["id"])
            continue
        objects.append(
            {
                "id": obj["id"],
                "label": label,
                "label_embedding": tenc.encode(label),
                "mask": masks[i],
                "features": penc.encode(descriptor),
                "articulated": bool(obj.get("articulated", False)),
            }
        )
    if not objects:
        raise NoObjectsDetected(f"{image_path.name}: every detection was empty")

    sidecar = fixture.get("sidecar")
    out = write_bundle(
        Path(out_dir), intrinsics, depth, objects, floor_mask, wall_masks, sidecar
    )
    log.info("wrote bundle %s (%d objects)", out, len(objects))
    return out
