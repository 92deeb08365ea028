"""Extractor configuration: model identifiers, delegate endpoint, mock mode."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class FeatureDims:
    patch_h: int = 3
    patch_w: int = 3
    d_vis: int = 8
    d_text: int = 16


@dataclass(frozen=True)
class ExtractorConfig:
    captioner: str = "mock-captioner/1"
    segmenter: str = "mock-segmenter/1"
    depth_estimator: str = "mock-depth/1"
    patch_encoder: str = "mock-patch/1"
    text_encoder: str = "mock-text/1"
    delegate_endpoint: str = ""
    delegate_api_key: str = ""
    mock: bool = True
    estimate_intrinsics: bool = False
    dims: FeatureDims = field(default_factory=FeatureDims)

    def __post_init__(self):
        # mock mode must be runnable with zero credentials
        if not self.mock and self.delegate_endpoint and not self.delegate_api_key:
            raise ValueError("live delegate endpoint configured without an api key")
