import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sas.pool_io import EmbeddingPool, make_pool
from sas.synth import SyntheticSpec, generate_pool


def unit(*coords) -> np.ndarray:
    v = np.asarray(coords, dtype=np.float64)
    return v / np.linalg.norm(v)


@pytest.fixture
def tiny_pool() -> EmbeddingPool:
    """2 classes in 3-D: class 0 around e1, class 1 around e2."""
    return make_pool(
        class_names=["alpha", "beta"],
        prototypes=np.array([[1, 0, 0], [0, 1, 0]], dtype=np.float64),
        image_ids=["a0", "a1", "a2", "b0", "b1"],
        labels=[0, 0, 0, 1, 1],
        features=np.array(
            [
                unit(1, 0, 0),
                unit(1, 0.2, 0),
                unit(1, 0, 0.3),
                unit(0, 1, 0),
                unit(0.1, 1, 0),
            ]
        ),
    )


@pytest.fixture
def random_pool() -> EmbeddingPool:
    return generate_pool(
        SyntheticSpec(dim=16, n_classes=3, per_class=20, concentration=4.0, seed=42)
    )
