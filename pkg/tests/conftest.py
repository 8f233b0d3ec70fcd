import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """Small procedural dataset shared by the pipeline-level tests
    (6 sketches per class keeps them fast; acceptance builds its own)."""
    from sbsr.toydata import build_toy_dataset

    root = tmp_path_factory.mktemp("toy-small")
    return build_toy_dataset(root, seed=11, sketches_per_class=6, train_per_class=4)
