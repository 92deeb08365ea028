import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import build_twin_fixture  # noqa: E402


@pytest.fixture(scope="session")
def twin_fixture(tmp_path_factory):
    """(bundle_dir, db_dir, ground truth) for the six-object twin scene."""
    root = tmp_path_factory.mktemp("twin")
    return build_twin_fixture(root)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
