import numpy as np
import pytest

from fingerkit.grid import GridSpec
from fingerkit.synthetic import generate_synthetic, random_smooth_field


@pytest.fixture(scope="session")
def smooth_field():
    spec = GridSpec((24, 24, 24), spacing=1.0, origin=(0.0, 0.0, 23.0))
    return random_smooth_field(spec, seed=42)


@pytest.fixture(scope="session")
def ridge_line_data():
    return generate_synthetic("gaussian_ridge_line")


@pytest.fixture(scope="session")
def twin_merge_data():
    return generate_synthetic("twin_blob_merge")


@pytest.fixture(scope="session")
def split_data():
    return generate_synthetic("blob_split")


@pytest.fixture(scope="session")
def branching_data():
    return generate_synthetic("branching_finger")


@pytest.fixture(scope="session")
def interior_voxels():
    def pick(spec, n, seed=0, margin=2):
        rng = np.random.default_rng(seed)
        return np.stack(
            [rng.integers(margin, spec.dims[a] - margin, size=n) for a in range(3)],
            axis=1,
        )

    return pick
