"""Offline asset-database builder: encodes snapshot renders and category
texts to the compiler's feature-file format. Runs once and can be cached."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .adapters import patch_encoder, text_encoder
from .config import ExtractorConfig
from .errors import MissingSnapshot
from .extract import snapshot_descriptor
from .formats import write_asset_db

log = logging.getLogger(__name__)


def build_asset_db(
    spec: dict, out_dir: str | Path, cfg: ExtractorConfig = ExtractorConfig()
) -> Path:
    """Build a database directory from an asset spec.

    Spec: {"assets": [{id, category, canonical_extents, snapshots:
    [{orientation: [w,x,y,z], representative?}], door_count?, drawer_count?,
    links?, meshes?}]}. In mock mode each snapshot's "render" is its content
    descriptor (asset id + snapshot index).
    """
    penc = patch_encoder(cfg)
    tenc = text_encoder(cfg)

    assets = []
    for asset in spec.get("assets", []):
        aid = asset["id"]
        snaps_in = asset.get("snapshots", [])
        if not snaps_in:
            raise MissingSnapshot(f"asset {aid!r} lists no snapshots")
        seen_orients = set()
        snaps = []
        has_representative = any(s.get("representative") for s in snaps_in)
        for s, snap in enumerate(snaps_in):
            q = tuple(round(float(x), 9) for x in snap["orientation"])
            if q in seen_orients or tuple(-v for v in q) in seen_orients:
                log.warning("asset %s: duplicated snapshot orientation %s", aid, q)
            seen_orients.add(q)
            snaps.append(
                {
                    "orientation": snap["orientation"],
                    "representative": bool(
                        snap.get("representative", not has_representative and s == 0)
                    ),
                    "features": penc.encode(snapshot_descriptor(aid, s)),
                }
            )
        assets.append(
            {
                "id": aid,
                "category": asset["category"],
                "category_embedding": tenc.encode(asset["category"]),
                "canonical_extents": asset["canonical_extents"],
                "door_count": asset.get("door_count", 0),
                "drawer_count": asset.get("drawer_count", 0),
                "links": asset.get("links"),
                "collision_box": asset.get("collision_box"),
                "snapshots": snaps,
                "meshes": asset.get("meshes", {}),
            }
        )
    out = write_asset_db(Path(out_dir), assets)
    log.info("wrote asset db %s (%d assets)", out, len(assets))
    return out
