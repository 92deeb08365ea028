import json
import math
from pathlib import Path

import pytest

SNAPSHOT_YAWS = [0.0, math.pi / 2, math.pi, -math.pi / 2]


def quat_z(angle):
    return [math.cos(angle / 2), 0.0, 0.0, math.sin(angle / 2)]


OBJECTS = [
    # id, caption, category, size, center xy, snapshot index, articulated
    ("cab_0", "a wooden cabinet", "cabinet", (0.6, 0.8, 1.2), (2.6, -0.7), 0, True),
    ("tab_0", "a small dining table", "table", (0.7, 1.2, 0.7), (2.5, 0.8), 0, False),
    ("box_0", "a storage crate", "crate", (0.5, 0.5, 0.4), (3.5, 0.0), 1, False),
]

INTRINSICS = {"fx": 390.0, "fy": 390.0, "cx": 239.5, "cy": 179.5, "width": 480, "height": 360}


def fixture_payload():
    return {
        "intrinsics": INTRINSICS,
        "camera": {"pos": [0.0, 0.0, 3.0], "tilt": 0.7},
        "wall_x": 4.2,
        "objects": [
            {
                "id": oid,
                "caption": caption,
                "depicts": {"asset": f"{oid}_twin", "orientation_index": snap},
                "center": [cx, cy, size[2] / 2],
                "size": list(size),
                "yaw": SNAPSHOT_YAWS[snap],
                "articulated": articulated,
            }
            for oid, caption, _, size, (cx, cy), snap, articulated in OBJECTS
        ],
    }


def asset_spec():
    assets = []
    for oid, _, category, size, _, _, articulated in OBJECTS:
        assets.append(
            {
                "id": f"{oid}_twin",
                "category": category,
                "canonical_extents": list(size),
                "door_count": 1 if articulated else 0,
                "snapshots": [
                    {"orientation": quat_z(yaw), "representative": s == 0}
                    for s, yaw in enumerate(SNAPSHOT_YAWS)
                ],
            }
        )
        # one distractor per category; articulated categories get an
        # articulated distractor so cousin lists have depth
        assets.append(
            {
                "id": f"{oid}_alt",
                "category": category,
                "canonical_extents": [s * 1.2 for s in size],
                "door_count": 2 if articulated else 0,
                "snapshots": [
                    {"orientation": quat_z(yaw), "representative": s == 0}
                    for s, yaw in enumerate(SNAPSHOT_YAWS)
                ],
            }
        )
    return {"assets": assets}


@pytest.fixture
def image_with_fixture(tmp_path) -> Path:
    image = tmp_path / "scene.png"
    image.write_bytes(b"\x89PNG\r\n\x1a\nstub")  # mock mode never decodes it
    (tmp_path / "scene.png.fixture.json").write_text(
        json.dumps(fixture_payload(), indent=2), encoding="utf-8"
    )
    return image


@pytest.fixture
def spec_file(tmp_path) -> Path:
    path = tmp_path / "assets.json"
    path.write_text(json.dumps(asset_spec(), indent=2), encoding="utf-8")
    return path
