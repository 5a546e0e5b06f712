import numpy as np
import pytest


def lattice_blob(rng, h, w, n_seeds=3, steps=40):
    """Random connected-ish blob grown by clipped lattice walks."""
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(n_seeds):
        y, x = int(rng.integers(h)), int(rng.integers(w))
        for _ in range(steps):
            mask[y, x] = True
            y = int(np.clip(y + rng.integers(-1, 2), 0, h - 1))
            x = int(np.clip(x + rng.integers(-1, 2), 0, w - 1))
    return mask


def random_instances(rng, h, w, n_instances=2):
    ids = np.zeros((h, w), dtype=np.int32)
    for i in range(1, n_instances + 1):
        ids[lattice_blob(rng, h, w)] = i
    return ids


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
