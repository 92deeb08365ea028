"""Model adapters: every foundation-model call goes through one of these.

Mock adapters are deterministic and network-free (CI runs only these); live
adapters probe for their dependencies lazily and raise ModelUnavailable with
guidance when absent.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .config import ExtractorConfig, FeatureDims
from .errors import DelegateUnavailable, MissingFixture, ModelUnavailable
from .render import render

_WORD = re.compile(r"[a-z0-9_]+")


def _seed(key: str) -> int:
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")


def keyed_unit_vector(key: str, d: int) -> np.ndarray:
    rng = np.random.default_rng(_seed("text:" + key))
    v = rng.normal(size=d)
    v /= np.linalg.norm(v)
    return v.astype(np.float32)


def keyed_patch_grid(key: str, dims: FeatureDims) -> np.ndarray:
    rng = np.random.default_rng(_seed("patch:" + key))
    g = rng.normal(size=(dims.patch_h, dims.patch_w, dims.d_vis))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return g.astype(np.float32)


def head_noun(text: str) -> str:
    """The mock text encoder embeds a caption's head noun so that 'a wooden
    cabinet' lands next to the category 'cabinet'."""
    words = _WORD.findall(text.lower())
    return words[-1] if words else text.lower()


class MockVisionStack:
    """Captioner + segmenter + depth estimator, scripted by a fixture file.

    The fixture `<image>.fixture.json` describes the boxes the 'image' shows;
    masks and depth come from an analytic render of exactly that scene.
    """

    def __init__(self, cfg: ExtractorConfig):
        self.cfg = cfg

    def load_fixture(self, image_path: Path) -> dict:
        fixture_path = image_path.with_name(image_path.name + ".fixture.json")
        if not fixture_path.exists():
            raise MissingFixture(
                f"mock mode needs {fixture_path.name} next to the image"
            )
        with open(fixture_path, encoding="utf-8") as fh:
            return json.load(fh)

    def captions(self, fixture: dict) -> list[str]:
        return [obj["caption"] for obj in fixture["objects"]]

    def detect(self, fixture: dict):
        """(depth, per-object masks, floor mask, wall masks)."""
        depth, owner = render(fixture)
        n = len(fixture["objects"])
        masks = [owner == i for i in range(n)]
        floor = owner == n
        walls = [owner == n + 1] if fixture.get("wall_x") is not None else []
        return depth, masks, floor, walls

    def select_label(self, captions: list[str], index: int) -> str:
        # caption re-synchronization is the identity for scripted detections
        return captions[index]


class MockPatchEncoder:
    """Deterministic stand-in for the visual patch encoder.

    Content is identified by a descriptor key; identical keys give identical
    grids, which is what lets snapshots and depicted objects match exactly.
    """

    def __init__(self, dims: FeatureDims):
        self.dims = dims

    def encode(self, descriptor: str) -> np.ndarray:
        return keyed_patch_grid(descriptor, self.dims)


class MockTextEncoder:
    def __init__(self, dims: FeatureDims):
        self.dims = dims

    def encode(self, text: str) -> np.ndarray:
        return keyed_unit_vector(head_noun(text), self.dims.d_text)


class ScriptedDelegate:
    """Delegate whose replies come from a transcript file (object id ->
    choices). Every request/response pair is recorded for provenance."""

    def __init__(self, script: dict):
        self.script = dict(script.get("objects", script))
        self.transcript: list[dict] = []

    def choose(self, object_id: str, prompt: str) -> dict:
        reply = dict(self.script.get(object_id, {}))
        self.transcript.append(
            {"object_id": object_id, "prompt": prompt, "reply": reply}
        )
        return reply


# -- live stubs -----------------------------------------------------------------


class LiveVisionStack:
    def __init__(self, cfg: ExtractorConfig):
        try:
            import PIL  # noqa: F401
            import torch  # noqa: F401
            import transformers  # noqa: F401
        except ImportError as exc:
            raise ModelUnavailable(
                f"live extraction needs pillow+torch+transformers ({exc}); "
                "install the [live] extra and provide model weights, or use mock mode"
            ) from exc
        raise ModelUnavailable(
            f"no weights configured for {cfg.captioner!r}/{cfg.segmenter!r}/"
            f"{cfg.depth_estimator!r}; this environment is offline"
        )


class LiveDelegate:
    def __init__(self, cfg: ExtractorConfig):
        if not cfg.delegate_endpoint:
            raise DelegateUnavailable("no delegate endpoint configured")
        raise DelegateUnavailable(
            f"delegate endpoint {cfg.delegate_endpoint!r} is unreachable from "
            "this environment; use a scripted transcript"
        )


def vision_stack(cfg: ExtractorConfig):
    return MockVisionStack(cfg) if cfg.mock else LiveVisionStack(cfg)


def patch_encoder(cfg: ExtractorConfig):
    if cfg.mock:
        return MockPatchEncoder(cfg.dims)
    raise ModelUnavailable(f"patch encoder {cfg.patch_encoder!r}: live mode is offline")


def text_encoder(cfg: ExtractorConfig):
    if cfg.mock:
        return MockTextEncoder(cfg.dims)
    raise ModelUnavailable(f"text encoder {cfg.text_encoder!r}: live mode is offline")
