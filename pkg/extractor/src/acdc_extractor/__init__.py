"""Extraction front end for the acdc scene compiler.

Runs vision foundation models (or deterministic mocks) to produce extraction
bundles, asset databases, and delegate sidecars in the compiler's published
file formats. Everything downstream is model-agnostic.
"""

from .annotate import annotate
from .config import ExtractorConfig, FeatureDims
from .dbbuild import build_asset_db
from .errors import (
    DelegateUnavailable,
    ExtractorError,
    MissingFixture,
    MissingSnapshot,
    ModelUnavailable,
    NoObjectsDetected,
)
from .extract import extract

__version__ = "0.1.0"

__all__ = [
    "DelegateUnavailable",
    "ExtractorConfig",
    "ExtractorError",
    "FeatureDims",
    "MissingFixture",
    "MissingSnapshot",
    "ModelUnavailable",
    "NoObjectsDetected",
    "annotate",
    "build_asset_db",
    "extract",
]
